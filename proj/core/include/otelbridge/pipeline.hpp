#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <typeindex>
#include <utility>
#include <vector>

namespace otelbridge::pipeline {

inline constexpr std::size_t kDefaultQueueCapacity = 1024;

class PipelineError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// connect() was given ports with different element types.
class TypeMismatchError : public PipelineError {
  using PipelineError::PipelineError;
};

/// The stage graph contains a cycle; only DAGs are supported.
class CycleError : public PipelineError {
  using PipelineError::PipelineError;
};

/// A port was left unconnected or connected twice.
class WiringError : public PipelineError {
  using PipelineError::PipelineError;
};

/// Thread-safe FIFO with a capacity bound. push() blocks while full and
/// returns false once the queue is closed; pop() returns nullopt only after
/// close() AND all buffered elements have been drained, which makes the
/// closed flag act as an end-of-stream marker positioned after the last
/// element.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  bool push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    lock.unlock();
    not_empty_.notify_one();
    return true;
  }

  /// Appends even when full; used by the deterministic single-threaded
  /// scheduler, where a blocking push would deadlock.
  bool push_unbounded(T value) {
    {
      std::lock_guard lock(mutex_);
      if (closed_) return false;
      items_.push_back(std::move(value));
    }
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    return pop_locked(lock);
  }

  std::optional<T> try_pop() {
    std::unique_lock lock(mutex_);
    if (items_.empty()) return std::nullopt;
    return pop_locked(lock);
  }

  std::optional<T> pop_wait_for(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    not_empty_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    return pop_locked(lock);
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  bool drained() const {
    std::lock_guard lock(mutex_);
    return closed_ && items_.empty();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  std::optional<T> pop_locked(std::unique_lock<std::mutex>& lock) {
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    lock.unlock();
    not_full_.notify_one();
    return value;
  }

  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  const std::size_t capacity_;
  bool closed_ = false;
};

enum class StepStatus {
  kProgress,  // did work; call again
  kIdle,      // nothing available right now
  kDone,      // will never produce again
};

enum class StepMode {
  kBlocking,     // waits (bounded) for input; used by the threaded scheduler
  kNonBlocking,  // never waits; used by the stepped scheduler
};

class Stage;

class PortBase {
 public:
  PortBase(Stage* owner, std::string name, std::type_index type)
      : owner_(owner), name_(std::move(name)), type_(type) {}
  virtual ~PortBase() = default;

  Stage& owner() const { return *owner_; }
  const std::string& name() const { return name_; }
  std::type_index element_type() const { return type_; }
  bool connected() const { return connected_; }

 protected:
  friend class Pipeline;
  Stage* owner_;
  std::string name_;
  std::type_index type_;
  bool connected_ = false;
};

class OutputPortBase : public PortBase {
 public:
  using PortBase::PortBase;

 protected:
  friend class Pipeline;
  /// Creates the edge queue and attaches it to this port.
  virtual std::shared_ptr<void> make_queue(std::size_t capacity) = 0;
  virtual void close_queue() = 0;
};

class InputPortBase : public PortBase {
 public:
  using PortBase::PortBase;
  virtual bool drained() const = 0;

 protected:
  friend class Pipeline;
  virtual void attach_queue(std::shared_ptr<void> queue) = 0;
  virtual void close_queue() = 0;
};

/// How often a blocking pop wakes up so stages can run timer work (eviction,
/// flushes) while idle.
inline constexpr std::chrono::milliseconds kBlockingPollInterval{50};

class Stage {
 public:
  explicit Stage(std::string name) : name_(std::move(name)) {}
  virtual ~Stage() = default;

  Stage(const Stage&) = delete;
  Stage& operator=(const Stage&) = delete;

  const std::string& name() const { return name_; }

  /// Performs one unit of work: a source emits a bounded burst, a filter
  /// consumes at most one input element.
  virtual StepStatus step(StepMode mode) = 0;

  /// Final flush, called once after step() returns kDone (or the stage
  /// failed); output queues close right after.
  virtual void on_stop() {}

  std::uint64_t in_count() const { return in_count_.load(std::memory_order_relaxed); }
  std::uint64_t out_count() const { return out_count_.load(std::memory_order_relaxed); }
  std::uint64_t dropped_count() const { return dropped_count_.load(std::memory_order_relaxed); }

  /// Stages call this when they intentionally discard an element.
  void count_dropped(std::uint64_t n = 1) {
    dropped_count_.fetch_add(n, std::memory_order_relaxed);
  }

 protected:
  template <typename T>
  class InputPort;
  template <typename T>
  class OutputPort;

  template <typename T>
  InputPort<T>& make_input(std::string name) {
    auto port = std::make_unique<InputPort<T>>(this, std::move(name));
    auto& ref = *port;
    inputs_own_.push_back(std::move(port));
    inputs_.push_back(&ref);
    return ref;
  }

  template <typename T>
  OutputPort<T>& make_output(std::string name) {
    auto port = std::make_unique<OutputPort<T>>(this, std::move(name));
    auto& ref = *port;
    outputs_own_.push_back(std::move(port));
    outputs_.push_back(&ref);
    return ref;
  }

 private:
  friend class Pipeline;

  void count_in() { in_count_.fetch_add(1, std::memory_order_relaxed); }
  void count_out() { out_count_.fetch_add(1, std::memory_order_relaxed); }

  std::string name_;
  std::vector<std::unique_ptr<InputPortBase>> inputs_own_;
  std::vector<std::unique_ptr<OutputPortBase>> outputs_own_;
  std::vector<InputPortBase*> inputs_;
  std::vector<OutputPortBase*> outputs_;
  std::atomic<std::uint64_t> in_count_{0};
  std::atomic<std::uint64_t> out_count_{0};
  std::atomic<std::uint64_t> dropped_count_{0};
  bool unbounded_push_ = false;  // set by the stepped scheduler
};

template <typename T>
class Stage::InputPort final : public InputPortBase {
 public:
  InputPort(Stage* owner, std::string name)
      : InputPortBase(owner, std::move(name), std::type_index(typeid(T))) {}

  std::optional<T> pop(StepMode mode) {
    if (!queue_) return std::nullopt;
    auto value = mode == StepMode::kBlocking ? queue_->pop_wait_for(kBlockingPollInterval)
                                             : queue_->try_pop();
    if (value) owner_->count_in();
    return value;
  }

  bool drained() const override { return queue_ == nullptr || queue_->drained(); }

 private:
  friend class Pipeline;
  void attach_queue(std::shared_ptr<void> queue) override {
    queue_ = std::static_pointer_cast<BoundedQueue<T>>(std::move(queue));
  }
  void close_queue() override {
    if (queue_) queue_->close();
  }

  std::shared_ptr<BoundedQueue<T>> queue_;
};

template <typename T>
class Stage::OutputPort final : public OutputPortBase {
 public:
  OutputPort(Stage* owner, std::string name)
      : OutputPortBase(owner, std::move(name), std::type_index(typeid(T))) {}

  /// Pushes downstream; a false return means the element was dropped because
  /// the consumer is gone, and it has been counted as such.
  bool push(T value) {
    const bool delivered =
        queue_ && (owner_->unbounded_push_ ? queue_->push_unbounded(std::move(value))
                                           : queue_->push(std::move(value)));
    if (delivered) {
      owner_->count_out();
    } else {
      owner_->count_dropped();
    }
    return delivered;
  }

 private:
  friend class Pipeline;
  std::shared_ptr<void> make_queue(std::size_t capacity) override {
    queue_ = std::make_shared<BoundedQueue<T>>(capacity);
    return queue_;
  }
  void close_queue() override {
    if (queue_) queue_->close();
  }

  std::shared_ptr<BoundedQueue<T>> queue_;
};

struct StageStats {
  std::string stage;
  std::uint64_t in = 0;
  std::uint64_t out = 0;
  std::uint64_t dropped = 0;
};

struct StageFailure {
  std::string stage;
  std::string message;
};

struct TerminationReport {
  std::vector<StageStats> stages;  // in stage construction order
  std::vector<StageFailure> failures;

  bool ok() const { return failures.empty(); }
  const StageStats* stats_for(std::string_view stage_name) const;
};

/// Owns stages and the edges between them; runs the graph to completion.
class Pipeline {
 public:
  template <typename S, typename... Args>
  S& add_stage(Args&&... args) {
    auto stage = std::make_unique<S>(std::forward<Args>(args)...);
    S& ref = *stage;
    stages_.push_back(std::move(stage));
    return ref;
  }

  /// Builds a FIFO edge; throws TypeMismatchError if element types differ
  /// and WiringError if either port is already connected.
  void connect(OutputPortBase& out, InputPortBase& in,
               std::size_t capacity = kDefaultQueueCapacity);

  /// Runs every stage on its own thread until all sources finish and all
  /// queues drain.
  TerminationReport run_threaded() { return run(false); }

  /// Deterministic single-threaded scheduler: steps stages round-robin in
  /// topological order. Queue capacities are not enforced in this mode.
  TerminationReport run_stepped() { return run(true); }

  std::size_t stage_count() const { return stages_.size(); }

 private:
  struct Edge {
    Stage* from;
    Stage* to;
  };

  TerminationReport run(bool stepped);
  /// Topological order of stages_; throws CycleError / WiringError.
  std::vector<Stage*> validate_and_order();
  void finish_stage(Stage& stage, TerminationReport& report, std::mutex& report_mutex);

  std::vector<std::unique_ptr<Stage>> stages_;
  std::vector<Edge> edges_;
};

// ---------------------------------------------------------------------------
// Generic stages. Domain-specific stages derive from Stage directly; these
// cover sources, sinks and stateless filters.

/// Emits elements produced by a pump functor. The pump gets an emit callback
/// and returns false when the stream is exhausted.
template <typename Out>
class FunctionSource : public Stage {
 public:
  using Emit = std::function<bool(Out)>;
  using Pump = std::function<bool(const Emit&)>;

  FunctionSource(std::string name, Pump pump)
      : Stage(std::move(name)), pump_(std::move(pump)), out_(make_output<Out>("out")) {}

  OutputPort<Out>& output() { return out_; }

  StepStatus step(StepMode) override {
    const bool more = pump_([this](Out v) { return out_.push(std::move(v)); });
    return more ? StepStatus::kProgress : StepStatus::kDone;
  }

 private:
  Pump pump_;
  OutputPort<Out>& out_;
};

/// Emits the contents of a vector, one element per step.
template <typename Out>
class VectorSource : public Stage {
 public:
  VectorSource(std::string name, std::vector<Out> items)
      : Stage(std::move(name)), items_(std::move(items)), out_(make_output<Out>("out")) {}

  OutputPort<Out>& output() { return out_; }

  StepStatus step(StepMode) override {
    if (next_ >= items_.size()) return StepStatus::kDone;
    out_.push(std::move(items_[next_++]));
    return StepStatus::kProgress;
  }

 private:
  std::vector<Out> items_;
  std::size_t next_ = 0;
  OutputPort<Out>& out_;
};

/// One-in one-out stage; the handler may emit any number of elements per
/// input via the emitter callback.
template <typename In, typename Out>
class TransformStage : public Stage {
 public:
  using Emit = std::function<bool(Out)>;
  using Handler = std::function<void(In, const Emit&)>;

  TransformStage(std::string name, Handler handler)
      : Stage(std::move(name)),
        handler_(std::move(handler)),
        in_(make_input<In>("in")),
        out_(make_output<Out>("out")) {}

  InputPort<In>& input() { return in_; }
  OutputPort<Out>& output() { return out_; }

  StepStatus step(StepMode mode) override {
    auto value = in_.pop(mode);
    if (!value) {
      return in_.drained() ? StepStatus::kDone : StepStatus::kIdle;
    }
    handler_(std::move(*value), [this](Out v) { return out_.push(std::move(v)); });
    return StepStatus::kProgress;
  }

 private:
  Handler handler_;
  InputPort<In>& in_;
  OutputPort<Out>& out_;
};

/// Terminal stage feeding a consumer functor.
template <typename In>
class SinkStage : public Stage {
 public:
  using Handler = std::function<void(In)>;

  SinkStage(std::string name, Handler handler)
      : Stage(std::move(name)), handler_(std::move(handler)), in_(make_input<In>("in")) {}

  InputPort<In>& input() { return in_; }

  StepStatus step(StepMode mode) override {
    auto value = in_.pop(mode);
    if (!value) {
      return in_.drained() ? StepStatus::kDone : StepStatus::kIdle;
    }
    handler_(std::move(*value));
    return StepStatus::kProgress;
  }

 private:
  Handler handler_;
  InputPort<In>& in_;
};

/// Fans one stream out to N outputs chosen by a selector functor.
template <typename T>
class RouterStage : public Stage {
 public:
  using Selector = std::function<std::size_t(const T&)>;

  RouterStage(std::string name, std::size_t fanout, Selector selector)
      : Stage(std::move(name)), selector_(std::move(selector)), in_(make_input<T>("in")) {
    outs_.reserve(fanout);
    for (std::size_t i = 0; i < fanout; ++i) {
      outs_.push_back(&make_output<T>("out" + std::to_string(i)));
    }
  }

  InputPort<T>& input() { return in_; }
  OutputPort<T>& output(std::size_t i) { return *outs_.at(i); }
  std::size_t fanout() const { return outs_.size(); }

  StepStatus step(StepMode mode) override {
    auto value = in_.pop(mode);
    if (!value) {
      return in_.drained() ? StepStatus::kDone : StepStatus::kIdle;
    }
    outs_.at(selector_(*value) % outs_.size())->push(std::move(*value));
    return StepStatus::kProgress;
  }

 private:
  Selector selector_;
  InputPort<T>& in_;
  std::vector<OutputPort<T>*> outs_;
};

/// Merges N input streams into one, polling inputs round-robin.
template <typename T>
class MergeStage : public Stage {
 public:
  MergeStage(std::string name, std::size_t fanin)
      : Stage(std::move(name)), out_(make_output<T>("out")) {
    ins_.reserve(fanin);
    for (std::size_t i = 0; i < fanin; ++i) {
      ins_.push_back(&make_input<T>("in" + std::to_string(i)));
    }
  }

  InputPort<T>& input(std::size_t i) { return *ins_.at(i); }
  OutputPort<T>& output() { return out_; }

  StepStatus step(StepMode mode) override {
    bool all_drained = true;
    for (std::size_t k = 0; k < ins_.size(); ++k) {
      auto& in = *ins_[(next_ + k) % ins_.size()];
      if (auto value = in.pop(StepMode::kNonBlocking)) {
        next_ = (next_ + k + 1) % ins_.size();
        out_.push(std::move(*value));
        return StepStatus::kProgress;
      }
      all_drained = all_drained && in.drained();
    }
    if (all_drained) return StepStatus::kDone;
    if (mode == StepMode::kBlocking) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return StepStatus::kIdle;
  }

 private:
  std::vector<InputPort<T>*> ins_;
  OutputPort<T>& out_;
  std::size_t next_ = 0;
};

}  // namespace otelbridge::pipeline
