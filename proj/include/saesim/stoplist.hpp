#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace saesim {

/// Raw tokens that mark a feature as "non-concept" when they appear among its
/// top-activating tokens. Membership is exact string equality, no normalization.
struct StoplistConfig {
  std::vector<std::string> keywords = default_keywords();

  bool contains(const std::string& token) const {
    return std::find(keywords.begin(), keywords.end(), token) != keywords.end();
  }

  /// Literal backslash-n, newline, empty string, space, punctuation and the
  /// two control tokens.
  static std::vector<std::string> default_keywords() {
    return {"\\n", "\n", "", " ", ".", ",", "!", "?", "-", "<bos>", "<|endoftext|>"};
  }
};

}  // namespace saesim
