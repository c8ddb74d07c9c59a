#include <doctest.h>

#include <cmath>
#include <vector>

#include "ccd/error.hpp"
#include "ccd/processors.hpp"

using namespace ccd;

TEST_CASE("repetition penalty") {
  const std::vector<TokenId> h{0, 1};
  CHECK(apply_repetition_penalty(LogitVector{2.0, -2.0, 1.0}, h, 2.0) == LogitVector{1.0, -4.0, 1.0});
  CHECK(apply_repetition_penalty(LogitVector{2.0, -2.0, 1.0}, h, 1.0) == LogitVector{2.0, -2.0, 1.0});
  const std::vector<TokenId> h0{0};
  CHECK(apply_repetition_penalty(LogitVector{0.0}, h0, 5.0) == LogitVector{0.0});
  // Repeated history entries penalise once.
  const std::vector<TokenId> twice{0, 0, 0};
  CHECK(apply_repetition_penalty(LogitVector{4.0, 1.0}, twice, 2.0) == LogitVector{2.0, 1.0});
  const std::vector<TokenId> bad{7};
  CHECK_THROWS_AS(apply_repetition_penalty(LogitVector{1.0}, bad, 2.0), Error);
}

TEST_CASE("min length") {
  ProcessorConfig cfg;
  cfg.min_length = 3;
  cfg.eos_token_id = 0;
  const LogitVector z{1.0, 2.0};
  const auto banned = enforce_min_length(z, 0, cfg);
  CHECK(banned[0] == kBanned);
  CHECK(banned[1] == 2.0);
  CHECK(enforce_min_length(z, 3, cfg) == z);
  cfg.min_length = 0;
  CHECK(enforce_min_length(z, 10, cfg) == z);
}

TEST_CASE("top-k") {
  CHECK(apply_top_k(LogitVector{0.1, 0.7, 0.2}, 1) == LogitVector{kBanned, 0.7, kBanned});
  CHECK(apply_top_k(LogitVector{0.1, 0.7, 0.2}, 0) == LogitVector{0.1, 0.7, 0.2});
  CHECK(apply_top_k(LogitVector{3.0, 3.0, 1.0}, 1) == LogitVector{3.0, kBanned, kBanned});
  CHECK(apply_top_k(LogitVector{3.0, kBanned, 1.0}, 5) == LogitVector{3.0, kBanned, 1.0});
}

TEST_CASE("top-p") {
  const LogitVector z{std::log(0.5), std::log(0.3), std::log(0.2)};
  CHECK(apply_top_p(z, 1.0) == z);
  const auto kept = apply_top_p(z, 0.8);
  CHECK(kept[0] == z[0]);
  CHECK(kept[1] == z[1]);
  CHECK(kept[2] == kBanned);
  const auto tiny = apply_top_p(z, 1e-12);
  CHECK(tiny == LogitVector{z[0], kBanned, kBanned});
  CHECK_THROWS_AS(apply_top_p(z, 0.0), Error);
}

TEST_CASE("temperature") {
  CHECK(apply_temperature(LogitVector{2.0, 0.0}, 2.0) == LogitVector{1.0, 0.0});
  CHECK(apply_temperature(LogitVector{2.0, kBanned}, 0.5) == LogitVector{4.0, kBanned});
  CHECK_THROWS_AS(apply_temperature(LogitVector{1.0}, 0.0), Error);
}

TEST_CASE("run_stack examples") {
  const LogitVector z{0.3, -1.25, 2.0, kBanned};
  const std::vector<TokenId> h{0, 2};
  ProcessorConfig identity;
  CHECK(identity.is_identity());
  CHECK(run_stack(z, h, 2, identity) == z);

  ProcessorConfig t;
  t.temperature = 2.0;
  CHECK(run_stack(LogitVector{2.0, 0.0}, {}, 0, t) == LogitVector{1.0, 0.0});

  ProcessorConfig pk;
  pk.repetition_penalty = 2.0;
  pk.top_k = 1;
  const std::vector<TokenId> h0{0};
  CHECK(run_stack(LogitVector{2.0, 1.5}, h0, 1, pk) == LogitVector{kBanned, 1.5});
}

TEST_CASE("run_stack rejects a fully banned result") {
  ProcessorConfig cfg;
  cfg.min_length = 1;
  cfg.eos_token_id = 0;
  CHECK_THROWS_WITH_AS(run_stack(LogitVector{0.0, kBanned}, {}, 0, cfg),
                       doctest::Contains("degenerate logits"), Error);
}

TEST_CASE("processor config validation") {
  ProcessorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.temperature = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.top_p = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.top_p = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.repetition_penalty = 0.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.eos_token_id = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
