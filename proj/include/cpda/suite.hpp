#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpda/value.hpp"

namespace cpda {

/// One test record: id, the tokens read() / getchar() consume, optionally the
/// expected output and an explicit verdict.
struct TestInput {
  std::string id;
  std::vector<Value> tokens;
  std::optional<std::vector<Value>> expected_output;
  std::optional<bool> pass;  // explicit verdict

  TestInput() = default;
  TestInput(std::string id_, std::vector<Value> toks) : id(std::move(id_)), tokens(std::move(toks)) {}
};

struct TestSuite {
  std::string name;
  std::vector<TestInput> tests;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace detail

/// Suite files are line oriented: one record per line,
///   id | input tokens | expected output | verdict
/// Trailing fields are optional. '#' lines are comments. Tokens use the
/// escape syntax of value.hpp (\s space, \n newline, \p pipe, \e empty).
inline TestSuite parse_suite(const std::string& text, const std::string& name = "") {
  TestSuite suite;
  suite.name = name;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> fields;
    std::string cur;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == '\\' && i + 1 < t.size()) { cur += t[i]; cur += t[i + 1]; ++i; continue; }
      if (t[i] == '|') { fields.push_back(cur); cur.clear(); continue; }
      cur += t[i];
    }
    fields.push_back(cur);
    if (fields.empty() || detail::trim(fields[0]).empty())
      throw std::runtime_error("suite line " + std::to_string(lineno) + ": missing test id");
    TestInput test;
    test.id = detail::trim(fields[0]);
    if (fields.size() > 1) {
      for (const auto& tok : detail::split_ws(fields[1])) test.tokens.push_back(parse_token(tok));
    }
    if (fields.size() > 2) {
      std::string f = detail::trim(fields[2]);
      if (!f.empty()) {
        std::vector<Value> out;
        for (const auto& tok : detail::split_ws(f)) out.push_back(parse_token(tok));
        test.expected_output = std::move(out);
      }
    }
    if (fields.size() > 3) {
      std::string v = detail::trim(fields[3]);
      if (v == "pass") test.pass = true;
      else if (v == "fail") test.pass = false;
      else if (!v.empty())
        throw std::runtime_error("suite line " + std::to_string(lineno) +
                                 ": verdict must be pass or fail");
      if (test.pass.has_value() && !test.expected_output.has_value())
        throw std::runtime_error("suite line " + std::to_string(lineno) +
                                 ": a verdict requires an expected output");
    }
    suite.tests.push_back(std::move(test));
  }
  return suite;
}

inline TestSuite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open suite file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string name = path;
  auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  auto dot = name.rfind('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_suite(ss.str(), name);
}

inline std::string serialize_suite(const TestSuite& suite) {
  std::ostringstream os;
  for (const auto& t : suite.tests) {
    os << t.id << " |";
    for (const auto& v : t.tokens) os << " " << token_str(v);
    if (t.expected_output || t.pass) {
      os << " |";
      if (t.expected_output)
        for (const auto& v : *t.expected_output) os << " " << token_str(v);
      if (t.pass) os << " | " << (*t.pass ? "pass" : "fail");
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace cpda
