#include "qsim/engine.hpp"

#include <string>

namespace qsim {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TaskArrival: return "task-arrival";
    case EventKind::ExecutionStart: return "execution-start";
    case EventKind::ExecutionComplete: return "execution-complete";
    case EventKind::Custom: return "custom";
  }
  return "unknown";
}

EventId Engine::schedule(SimTime at, EventPayload payload) {
  if (at < now_) {
    throw SchedulingInPast("event at t=" + std::to_string(at.seconds) + " but clock is at t=" +
                           std::to_string(now_.seconds));
  }
  Event ev;
  ev.id = next_seq_;
  ev.seq = next_seq_;
  ev.fire_at = at;
  ev.payload = payload;
  ++next_seq_;
  calendar_.push(ev);
  return ev.id;
}

Event Engine::pop_next() {
  Event ev = calendar_.top();
  calendar_.pop();
  now_ = ev.fire_at;
  ++fired_;
  return ev;
}

bool Engine::operator==(const Engine& other) const {
  if (now_ != other.now_ || next_seq_ != other.next_seq_ || fired_ != other.fired_ ||
      calendar_.size() != other.calendar_.size()) {
    return false;
  }
  auto a = calendar_;
  auto b = other.calendar_;
  while (!a.empty()) {
    if (!(a.top() == b.top())) return false;
    a.pop();
    b.pop();
  }
  return true;
}

}  // namespace qsim
