#include "drsvm/core.hpp"

#include <algorithm>
#include <cctype>

namespace drsvm {

Norm parse_norm(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (t == "1") return Norm::l1;
  if (t == "2") return Norm::l2;
  if (t == "inf" || t == "infinity") return Norm::linf;
  throw config_error("q: expected 1, 2 or inf, got '" + text + "'");
}

}  // namespace drsvm
