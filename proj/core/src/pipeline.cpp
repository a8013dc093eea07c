#include "otelbridge/pipeline.hpp"

#include <algorithm>
#include <thread>
#include <unordered_map>

namespace otelbridge::pipeline {

const StageStats* TerminationReport::stats_for(std::string_view stage_name) const {
  auto it = std::find_if(stages.begin(), stages.end(),
                         [&](const StageStats& s) { return s.stage == stage_name; });
  return it == stages.end() ? nullptr : &*it;
}

void Pipeline::connect(OutputPortBase& out, InputPortBase& in, std::size_t capacity) {
  if (out.element_type() != in.element_type()) {
    throw TypeMismatchError("cannot connect " + out.owner().name() + "." + out.name() + " to " +
                            in.owner().name() + "." + in.name() + ": element types differ");
  }
  if (out.connected()) {
    throw WiringError("output port " + out.owner().name() + "." + out.name() +
                      " is already connected");
  }
  if (in.connected()) {
    throw WiringError("input port " + in.owner().name() + "." + in.name() +
                      " is already connected");
  }
  auto queue = out.make_queue(capacity);
  in.attach_queue(std::move(queue));
  out.connected_ = true;
  in.connected_ = true;
  edges_.push_back(Edge{&out.owner(), &in.owner()});
}

std::vector<Stage*> Pipeline::validate_and_order() {
  if (stages_.empty()) {
    throw WiringError("pipeline has no stages");
  }
  for (const auto& stage : stages_) {
    for (const auto* port : stage->inputs_) {
      if (!port->connected()) {
        throw WiringError("input port " + stage->name() + "." + port->name() +
                          " is not connected");
      }
    }
    for (const auto* port : stage->outputs_) {
      if (!port->connected()) {
        throw WiringError("output port " + stage->name() + "." + port->name() +
                          " is not connected");
      }
    }
  }

  bool has_source = false;
  std::unordered_map<Stage*, std::size_t> indegree;
  for (const auto& stage : stages_) {
    indegree[stage.get()] = 0;
    if (stage->inputs_.empty()) has_source = true;
  }
  if (!has_source) {
    throw WiringError("pipeline has no source stage");
  }
  for (const auto& edge : edges_) {
    ++indegree[edge.to];
  }

  // Kahn's algorithm; iteration over stages_ keeps the order deterministic.
  std::vector<Stage*> order;
  order.reserve(stages_.size());
  std::deque<Stage*> ready;
  for (const auto& stage : stages_) {
    if (indegree[stage.get()] == 0) ready.push_back(stage.get());
  }
  while (!ready.empty()) {
    Stage* stage = ready.front();
    ready.pop_front();
    order.push_back(stage);
    for (const auto& edge : edges_) {
      if (edge.from == stage && --indegree[edge.to] == 0) {
        ready.push_back(edge.to);
      }
    }
  }
  if (order.size() != stages_.size()) {
    throw CycleError("pipeline graph contains a cycle");
  }
  return order;
}

void Pipeline::finish_stage(Stage& stage, TerminationReport& report, std::mutex& report_mutex) {
  try {
    stage.on_stop();
  } catch (const std::exception& e) {
    std::lock_guard lock(report_mutex);
    report.failures.push_back({stage.name(), std::string("on_stop: ") + e.what()});
  }
  for (auto* port : stage.outputs_) {
    port->close_queue();
  }
}

TerminationReport Pipeline::run(bool stepped) {
  auto order = validate_and_order();

  TerminationReport report;
  std::mutex report_mutex;

  auto fail_stage = [&](Stage& stage, const char* what) {
    {
      std::lock_guard lock(report_mutex);
      report.failures.push_back({stage.name(), what});
    }
    // Unblock upstream pushers: elements for a dead stage are dropped.
    for (auto* port : stage.inputs_) {
      port->close_queue();
    }
    for (auto* port : stage.outputs_) {
      port->close_queue();
    }
  };

  if (stepped) {
    for (auto& stage : stages_) {
      stage->unbounded_push_ = true;
    }
    std::vector<bool> done(order.size(), false);
    std::size_t remaining = order.size();
    while (remaining > 0) {
      bool progress = false;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (done[i]) continue;
        Stage& stage = *order[i];
        StepStatus status;
        try {
          status = stage.step(StepMode::kNonBlocking);
        } catch (const std::exception& e) {
          fail_stage(stage, e.what());
          done[i] = true;
          --remaining;
          progress = true;
          continue;
        }
        if (status == StepStatus::kProgress) {
          progress = true;
        } else if (status == StepStatus::kDone) {
          finish_stage(stage, report, report_mutex);
          done[i] = true;
          --remaining;
          progress = true;
        }
      }
      if (!progress) {
        // A DAG with finished sources always drains; reaching this means a
        // stage reported idle forever. Fail loudly instead of spinning.
        for (std::size_t i = 0; i < order.size(); ++i) {
          if (!done[i]) {
            std::lock_guard lock(report_mutex);
            report.failures.push_back({order[i]->name(), "stalled: no progress possible"});
          }
        }
        break;
      }
    }
    for (auto& stage : stages_) {
      stage->unbounded_push_ = false;
    }
  } else {
    std::vector<std::thread> threads;
    threads.reserve(order.size());
    for (Stage* stage : order) {
      threads.emplace_back([&, stage] {
        try {
          while (stage->step(StepMode::kBlocking) != StepStatus::kDone) {
          }
          finish_stage(*stage, report, report_mutex);
        } catch (const std::exception& e) {
          fail_stage(*stage, e.what());
        }
      });
    }
    for (auto& thread : threads) {
      thread.join();
    }
  }

  for (const auto& stage : stages_) {
    report.stages.push_back(
        {stage->name(), stage->in_count(), stage->out_count(), stage->dropped_count()});
  }
  return report;
}

}  // namespace otelbridge::pipeline
