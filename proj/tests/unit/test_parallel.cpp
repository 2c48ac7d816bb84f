#include <stdexcept>

#include <doctest.h>

#include "mobstat/parallel.hpp"

using namespace mobstat;

TEST_CASE("replicate is independent of execution mode") {
  auto fn = [](std::mt19937_64& rng, std::size_t i) { return static_cast<double>(rng() % 1000) + static_cast<double>(i); };
  CHECK(parallel::replicate(500, 3, fn, Execution::serial) == parallel::replicate(500, 3, fn, Execution::parallel));
  CHECK(parallel::replicate(5, 3, fn) != parallel::replicate(5, 4, fn));
}

TEST_CASE("boolean replicates") {
  const auto v = parallel::replicate(100, 1, [](std::mt19937_64&, std::size_t i) { return i % 2 == 0; });
  CHECK(std::count(v.begin(), v.end(), 1) == 50);
}

TEST_CASE("exceptions surface from the lowest index") {
  try {
    parallel::for_each_index(64, Execution::parallel, [](std::size_t i) {
      if (i == 40 || i == 17) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "17");
  }
}

TEST_CASE("chunking") {
  CHECK(parallel::chunk_count(0) == 0);
  CHECK(parallel::chunk_count(1) == 1);
  CHECK(parallel::chunk_count(parallel::kChunkSize) == 1);
  CHECK(parallel::chunk_count(parallel::kChunkSize + 1) == 2);
  CHECK(parallel::derive_seed(1, 0) != parallel::derive_seed(1, 1));
}
