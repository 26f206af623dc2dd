#include <cctype>
#include <sstream>

#include "duplex/planner.hpp"

namespace duplex::planning {

std::string format_plan(const std::vector<PlanStep>& steps) {
  std::string out;
  for (const auto& s : steps) out += s.printable() + "\n";
  out += "; cost = " + std::to_string(steps.size()) + " (unit cost)\n";
  return out;
}

std::vector<PlanStep> parse_plan(std::string_view text) {
  std::vector<PlanStep> steps;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == ';') continue;
    const auto close = line.find(')', first);
    if (line[first] != '(' || close == std::string::npos) {
      throw PlanFormatError("plan line " + std::to_string(line_no) + ": expected \"(action args...)\"");
    }
    const auto rest = line.find_first_not_of(" \t\r", close + 1);
    if (rest != std::string::npos && line[rest] != ';') {
      throw PlanFormatError("plan line " + std::to_string(line_no) + ": trailing text after ')'");
    }
    std::istringstream words(line.substr(first + 1, close - first - 1));
    PlanStep step;
    std::string word;
    while (words >> word) {
      for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (step.name.empty()) {
        step.name = word;
      } else {
        step.args.push_back(word);
      }
    }
    if (step.name.empty()) throw PlanFormatError("plan line " + std::to_string(line_no) + ": empty step");
    steps.push_back(std::move(step));
  }
  return steps;
}

}  // namespace duplex::planning
