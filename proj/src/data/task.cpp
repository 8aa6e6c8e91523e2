#include "ivpp/task.hpp"

#include <algorithm>
#include <cctype>

#include "ivpp/error.hpp"

namespace ivpp {

Task parse_task(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "COVID") return Task::covid;
  if (upper == "AB") return Task::ab;
  if (upper == "LS") return Task::ls;
  fail(ErrorKind::invalid_argument, "unknown task '" + std::string(name) + "'");
}

const char* task_name(Task task) {
  switch (task) {
    case Task::covid:
      return "COVID";
    case Task::ab:
      return "AB";
    case Task::ls:
      return "LS";
  }
  return "?";
}

}  // namespace ivpp
