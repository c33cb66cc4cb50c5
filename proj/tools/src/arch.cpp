// Copyright 2026 The DRBN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drbn_tools/arch.hpp"

#include <cctype>
#include <limits>
#include <optional>
#include <sstream>

namespace drbn::tools {

namespace {

std::string caret_message(std::size_t position, const std::string& message, const std::string& text) {
  return "architecture: " + message + " at position " + std::to_string(position) + "\n  " + text +
         "\n  " + std::string(position, ' ') + "^";
}

class Scanner {
 public:
  explicit Scanner(const std::string& text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  std::size_t pos() const { return pos_; }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const { fail_at(pos_, message); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& message) const {
    throw ArchParseError(at, message, text_);
  }

  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string word() {
    const std::size_t start = pos_;
    while (!done() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::size_t positive(const char* what) {
    const std::size_t start = pos_;
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail(std::string("expected ") + what);
    std::size_t v = 0;
    while (!done() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + static_cast<std::size_t>(text_[pos_++] - '0');
      if (v > std::numeric_limits<std::uint32_t>::max()) fail_at(start, std::string(what) + " is too large");
    }
    if (v == 0) fail_at(start, std::string(what) + " must be positive");
    return v;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

ArchParseError::ArchParseError(std::size_t position, const std::string& message, const std::string& text)
    : std::invalid_argument(caret_message(position, message, text)), position_(position) {}

NetworkSpec parse_architecture(const std::string& text, std::size_t height, std::size_t width) {
  Scanner in(text);
  if (in.done()) in.fail("empty architecture");
  std::optional<NetworkSpec> spec;
  do {
    const std::size_t layer_start = in.pos();
    const std::string kind = in.word();
    if (kind != "dense" && kind != "conv") {
      in.fail_at(layer_start, kind.empty() ? "expected layer kind" : "unknown layer kind '" + kind + "'");
    }
    in.expect(':');
    if (!spec) {
      spec = NetworkSpec::input(kind == "conv" ? Shape{height, width, 1} : Shape{height, width});
    }
    try {
      if (kind == "dense") {
        spec->dense(in.positive("hidden size"));
      } else {
        const std::size_t filters = in.positive("filter count");
        in.expect('x');
        const std::size_t kernel = in.positive("kernel size");
        std::size_t stride = 1;
        if (in.accept('s')) stride = in.positive("stride");
        spec->conv(filters, kernel, stride);
      }
    } catch (const ArchParseError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      in.fail_at(layer_start, e.what());
    }
    if (!in.done() && in.peek() != ',') in.fail("expected ',' or end of architecture");
  } while (in.accept(','));
  if (!in.done()) in.fail("unexpected character");
  return *spec;
}

std::string format_architecture(const NetworkSpec& spec) {
  std::ostringstream os;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& layer = spec.layers[l];
    if (l > 0) os << ',';
    if (layer.kind == LayerKind::conv) {
      os << "conv:" << layer.conv.filters << 'x' << layer.conv.kernel;
      if (layer.conv.stride != 1) os << 's' << layer.conv.stride;
    } else {
      os << "dense:" << layer.hidden_size();
    }
  }
  return os.str();
}

}  // namespace drbn::tools
