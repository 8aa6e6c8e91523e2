#pragma once

#include <string>
#include <string_view>

namespace ivpp {

// Downstream tasks: COVID (3-class B-mode), AB (binary B-mode), LS (binary M-mode).
enum class Task { covid, ab, ls };

Task parse_task(std::string_view name);
const char* task_name(Task task);  // "COVID", "AB", "LS"

inline bool uses_mmode(Task task) { return task == Task::ls; }
inline int class_count(Task task) { return task == Task::covid ? 3 : 2; }

}  // namespace ivpp
