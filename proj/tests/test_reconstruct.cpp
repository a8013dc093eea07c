#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "otelbridge/reconstruct.hpp"
#include "support/oracles.hpp"

using namespace otelbridge;
using reconstruct::ExecutionTrace;
using reconstruct::Reconstructor;

namespace {

transform::Execution make_execution(std::int64_t trace_id, std::int32_t eoi, std::int32_t ess,
                                    std::int64_t tin, std::int64_t tout) {
  transform::Execution e;
  e.signature = *records::parse_signature("void a.B.m" + std::to_string(eoi) + "()");
  e.hostname = "h";
  e.session_id = "s";
  e.trace_id = trace_id;
  e.tin_ns = tin;
  e.tout_ns = tout;
  e.eoi = eoi;
  e.ess = ess;
  return e;
}

ExecutionTrace make_trace(std::vector<std::pair<std::int32_t, std::int32_t>> eoi_ess) {
  ExecutionTrace trace;
  trace.trace_id = 1;
  std::int64_t t = 0;
  for (const auto& [eoi, ess] : eoi_ess) {
    // Wide nesting-compatible intervals; parent tests only look at indices.
    trace.executions.push_back(make_execution(1, eoi, ess, t, 1000 - t));
    ++t;
  }
  return trace;
}

}  // namespace

TEST_CASE("parent_index resolves the closest earlier execution one level up") {
  const auto trace = make_trace({{0, 0}, {1, 1}, {2, 1}, {3, 2}});
  CHECK(reconstruct::parent_index(trace, 0) == reconstruct::kParentRoot);
  CHECK(reconstruct::parent_index(trace, 1) == 0);
  CHECK(reconstruct::parent_index(trace, 2) == 0);
  CHECK(reconstruct::parent_index(trace, 3) == 2);  // greatest j < 3 with ess 1
}

TEST_CASE("parent_index reports unresolvable parents") {
  const auto trace = make_trace({{0, 0}, {1, 2}});  // depth jumps 0 -> 2
  CHECK(reconstruct::parent_index(trace, 1) == reconstruct::kParentNotFound);
  CHECK(reconstruct::validate_trace(trace).has_value());
}

TEST_CASE("validate_trace accepts a well-formed trace and names violations") {
  auto trace = make_trace({{0, 0}, {1, 1}, {2, 1}});
  trace.executions[0] = make_execution(1, 0, 0, 0, 100);
  trace.executions[1] = make_execution(1, 1, 1, 10, 40);
  trace.executions[2] = make_execution(1, 2, 1, 50, 90);
  CHECK_FALSE(reconstruct::validate_trace(trace).has_value());

  SUBCASE("eoi gap") {
    auto bad = trace;
    bad.executions[2].eoi = 3;
    CHECK(reconstruct::validate_trace(bad).has_value());
  }
  SUBCASE("root not at ess 0") {
    auto bad = trace;
    for (auto& e : bad.executions) e.ess += 1;
    CHECK(reconstruct::validate_trace(bad).has_value());
  }
  SUBCASE("trace id mismatch") {
    auto bad = trace;
    bad.executions[1].trace_id = 2;
    CHECK(reconstruct::validate_trace(bad).has_value());
  }
  SUBCASE("child interval escapes parent") {
    auto bad = trace;
    bad.executions[1].tout_ns = 500;  // beyond root tout 100
    CHECK(reconstruct::validate_trace(bad).has_value());
  }
  SUBCASE("tin after tout") {
    auto bad = trace;
    bad.executions[2].tin_ns = 95;
    bad.executions[2].tout_ns = 90;
    CHECK(reconstruct::validate_trace(bad).has_value());
  }
}

TEST_CASE("a singleton root completes immediately") {
  Reconstructor reconstructor;
  const auto result = reconstructor.add_execution(make_execution(7, 0, 0, 10, 20), 0);
  REQUIRE(result.completed.size() == 1);
  const auto& trace = result.completed[0];
  CHECK(trace.trace_id == 7);
  CHECK(trace.complete);
  REQUIRE(trace.executions.size() == 1);
  CHECK(trace.executions[0].eoi == 0);
  CHECK(reconstructor.buffered_trace_count() == 0);
  CHECK(reconstructor.buffered_execution_count() == 0);
}

TEST_CASE("completion-order arrival completes exactly when the root closes the interval") {
  // call tree: 0 -> (1, 2); completion order (by tout) is 1, 2, 0.
  Reconstructor reconstructor;
  auto r = reconstructor.add_execution(make_execution(1, 1, 1, 10, 40), 0);
  CHECK(r.completed.empty());
  r = reconstructor.add_execution(make_execution(1, 2, 1, 50, 90), 0);
  CHECK(r.completed.empty());
  CHECK(reconstructor.buffered_execution_count() == 2);

  r = reconstructor.add_execution(make_execution(1, 0, 0, 0, 100), 0);
  REQUIRE(r.completed.size() == 1);
  const auto& trace = r.completed[0];
  REQUIRE(trace.executions.size() == 3);
  CHECK(trace.executions[0].eoi == 0);  // sorted ascending by eoi
  CHECK(trace.executions[1].eoi == 1);
  CHECK(trace.executions[2].eoi == 2);
  CHECK_FALSE(reconstruct::validate_trace(trace).has_value());
}

TEST_CASE("duplicate eoi poisons the trace and it is never emitted") {
  Reconstructor reconstructor;
  reconstructor.add_execution(make_execution(1, 1, 1, 10, 40), 0);
  const auto dup = reconstructor.add_execution(make_execution(1, 1, 1, 11, 41), 0);
  CHECK(dup.duplicate_eoi);
  CHECK(dup.trace_broken);

  // Even a would-be-completing root cannot resurrect it.
  const auto root = reconstructor.add_execution(make_execution(1, 0, 0, 0, 100), 0);
  CHECK(root.completed.empty());

  const auto drained = reconstructor.drain();
  REQUIRE(drained.size() == 1);
  CHECK(drained[0].broken);
  CHECK(drained[0].reason == std::string("shutdown"));
}

TEST_CASE("timeout eviction removes only idle traces") {
  Reconstructor reconstructor;
  reconstructor.add_execution(make_execution(1, 1, 1, 10, 40), /*now_ns=*/0);
  reconstructor.add_execution(make_execution(2, 1, 1, 10, 40), /*now_ns=*/900);

  auto evicted = reconstructor.evict_expired(/*now_ns=*/1000, /*max_age_ns=*/500);
  REQUIRE(evicted.size() == 1);
  CHECK(evicted[0].trace_id == 1);
  CHECK(evicted[0].buffered_executions == 1);
  CHECK(evicted[0].reason == std::string("timeout"));
  CHECK(reconstructor.buffered_trace_count() == 1);

  // Trace 2 is still live and can complete.
  const auto result = reconstructor.add_execution(make_execution(2, 0, 0, 0, 100), 950);
  CHECK(result.completed.size() == 1);
}

TEST_CASE("capacity eviction removes the oldest trace, never the current one") {
  Reconstructor reconstructor({.max_buffered_traces = 2, .max_trace_size = 100000});
  reconstructor.add_execution(make_execution(10, 1, 1, 10, 40), /*now_ns=*/100);
  reconstructor.add_execution(make_execution(11, 1, 1, 10, 40), /*now_ns=*/200);

  const auto result = reconstructor.add_execution(make_execution(12, 1, 1, 10, 40), 300);
  REQUIRE(result.evicted.size() == 1);
  CHECK(result.evicted[0].trace_id == 10);  // oldest activity
  CHECK(result.evicted[0].reason == std::string("capacity"));
  CHECK(reconstructor.buffered_trace_count() == 2);

  // Touching trace 11 keeps it newer than 12.
  reconstructor.add_execution(make_execution(11, 2, 1, 50, 60), 400);
  const auto next = reconstructor.add_execution(make_execution(13, 1, 1, 10, 40), 500);
  REQUIRE(next.evicted.size() == 1);
  CHECK(next.evicted[0].trace_id == 12);
}

TEST_CASE("oversized traces are dropped once they cross max_trace_size") {
  Reconstructor reconstructor({.max_buffered_traces = 100, .max_trace_size = 3});
  reconstructor.add_execution(make_execution(1, 1, 1, 1, 2), 0);
  reconstructor.add_execution(make_execution(1, 2, 1, 3, 4), 0);
  reconstructor.add_execution(make_execution(1, 3, 1, 5, 6), 0);
  const auto result = reconstructor.add_execution(make_execution(1, 4, 1, 7, 8), 0);
  CHECK(result.trace_broken);
  CHECK(result.completed.empty());
  const auto drained = reconstructor.drain();
  REQUIRE(drained.size() == 1);
  CHECK(drained[0].broken);
}

TEST_CASE("parent_index agrees with the stack oracle on random traces") {
  std::mt19937_64 seeds(31337);
  for (int round = 0; round < 10'000; ++round) {
    oracles::TraceGenerator generator{seeds()};
    const auto generated = generator.generate(10, 200);

    ExecutionTrace trace;
    trace.trace_id = 1;
    for (const auto& node : generated.preorder) {
      trace.executions.push_back(
          make_execution(1, node.eoi, node.ess, node.tin, node.tout));
    }
    REQUIRE_MESSAGE(!reconstruct::validate_trace(trace).has_value(),
                    "round " << round << ": "
                             << reconstruct::validate_trace(trace).value_or(""));

    std::vector<std::int32_t> depths;
    for (const auto& node : generated.preorder) depths.push_back(node.ess);
    const auto expected = oracles::stack_parents(depths);
    for (std::size_t i = 0; i < trace.executions.size(); ++i) {
      const auto parent = reconstruct::parent_index(trace, i);
      const auto oracle = expected[i] == oracles::kOracleRoot ? reconstruct::kParentRoot
                                                              : expected[i];
      REQUIRE_MESSAGE(parent == oracle, "round " << round << " node " << i);
    }
  }
}

TEST_CASE("completion-order feeds reconstruct every random trace exactly once") {
  std::mt19937_64 seeds(8080);
  Reconstructor reconstructor({.max_buffered_traces = 100000, .max_trace_size = 100000});
  std::size_t completed_total = 0;
  const int kTraces = 2000;
  for (int round = 0; round < kTraces; ++round) {
    oracles::TraceGenerator generator{seeds()};
    const auto generated = generator.generate(8, 64);
    const std::int64_t trace_id = round + 1;

    std::size_t completed_here = 0;
    for (const std::size_t index : generated.completion_order) {
      const auto& node = generated.preorder[index];
      const auto result = reconstructor.add_execution(
          make_execution(trace_id, node.eoi, node.ess, node.tin, node.tout), round);
      REQUIRE_FALSE(result.trace_broken);
      for (const auto& trace : result.completed) {
        CHECK(trace.trace_id == trace_id);
        CHECK(trace.executions.size() == generated.preorder.size());
        CHECK_FALSE(reconstruct::validate_trace(trace).has_value());
        ++completed_here;
      }
    }
    REQUIRE_MESSAGE(completed_here == 1, "round " << round);
    completed_total += completed_here;
  }
  CHECK(completed_total == kTraces);
  CHECK(reconstructor.buffered_trace_count() == 0);
}
