#pragma once

#include <coroutine>
#include <cstddef>
#include <deque>
#include <exception>
#include <optional>
#include <utility>
#include <vector>

namespace secrecy {

/// Cooperative round scheduler for one party. Circuits are coroutines that
/// post payloads and then wait for the next flush; everything posted by all
/// live coroutines before a flush travels in the same round.
class Scheduler {
 public:
  void schedule(std::coroutine_handle<> h) { ready_.push_back(h); }
  void park(std::coroutine_handle<> h) { waiting_.push_back(h); }

  void drain() {
    while (!ready_.empty()) {
      auto h = ready_.front();
      ready_.pop_front();
      h.resume();
    }
  }
  bool parked() const { return !waiting_.empty(); }
  void release() {
    for (auto h : waiting_) ready_.push_back(h);
    waiting_.clear();
  }

 private:
  std::deque<std::coroutine_handle<>> ready_;
  std::vector<std::coroutine_handle<>> waiting_;
};

namespace detail {

struct JoinState {
  std::size_t pending = 0;
  std::coroutine_handle<> parent;
};

struct PromiseBase {
  std::coroutine_handle<> continuation;
  JoinState* join = nullptr;
  std::exception_ptr error;

  std::suspend_always initial_suspend() noexcept { return {}; }

  struct FinalAwaiter {
    bool await_ready() noexcept { return false; }
    template <class P>
    std::coroutine_handle<> await_suspend(std::coroutine_handle<P> h) noexcept {
      auto& p = h.promise();
      if (p.continuation) return p.continuation;
      if (p.join && --p.join->pending == 0) return p.join->parent;
      return std::noop_coroutine();
    }
    void await_resume() noexcept {}
  };
  FinalAwaiter final_suspend() noexcept { return {}; }
  void unhandled_exception() { error = std::current_exception(); }
};

}  // namespace detail

template <class T = void>
class Task;

template <class T>
class Task {
 public:
  struct promise_type : detail::PromiseBase {
    std::optional<T> value;
    Task get_return_object() { return Task(handle::from_promise(*this)); }
    void return_value(T v) { value = std::move(v); }
  };
  using handle = std::coroutine_handle<promise_type>;

  Task() = default;
  explicit Task(handle h) : h_(h) {}
  Task(Task&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Task& operator=(Task&& o) noexcept {
    if (this != &o) {
      reset();
      h_ = std::exchange(o.h_, {});
    }
    return *this;
  }
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;
  ~Task() { reset(); }

  bool done() const { return !h_ || h_.done(); }
  handle raw() const { return h_; }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) noexcept {
    h_.promise().continuation = parent;
    return h_;
  }
  T await_resume() { return result(); }

  T result() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
    return std::move(*h_.promise().value);
  }

 private:
  void reset() {
    if (h_) h_.destroy();
    h_ = {};
  }
  handle h_{};
};

template <>
class Task<void> {
 public:
  struct promise_type : detail::PromiseBase {
    Task get_return_object() { return Task(handle::from_promise(*this)); }
    void return_void() {}
  };
  using handle = std::coroutine_handle<promise_type>;

  Task() = default;
  explicit Task(handle h) : h_(h) {}
  Task(Task&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Task& operator=(Task&& o) noexcept {
    if (this != &o) {
      reset();
      h_ = std::exchange(o.h_, {});
    }
    return *this;
  }
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;
  ~Task() { reset(); }

  bool done() const { return !h_ || h_.done(); }
  handle raw() const { return h_; }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) noexcept {
    h_.promise().continuation = parent;
    return h_;
  }
  void await_resume() { result(); }

  void result() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
  }

 private:
  void reset() {
    if (h_) h_.destroy();
    h_ = {};
  }
  handle h_{};
};

/// Runs all child tasks concurrently and resumes the caller when every one
/// has finished. Errors are rethrown in child order.
class AllOf {
 public:
  AllOf(Scheduler& s, std::vector<Task<>>& tasks) : sched_(s), tasks_(tasks) {}

  bool await_ready() const noexcept { return tasks_.empty(); }
  void await_suspend(std::coroutine_handle<> parent) {
    state_.pending = tasks_.size();
    state_.parent = parent;
    for (auto& t : tasks_) {
      t.raw().promise().join = &state_;
      sched_.schedule(t.raw());
    }
  }
  void await_resume() {
    for (auto& t : tasks_) t.result();
  }

 private:
  Scheduler& sched_;
  std::vector<Task<>>& tasks_;
  detail::JoinState state_;
};

/// Suspends until the next flush of the party's batch buffer.
struct RoundAwaiter {
  Scheduler& sched;
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<> h) { sched.park(h); }
  void await_resume() const noexcept {}
};

}  // namespace secrecy
