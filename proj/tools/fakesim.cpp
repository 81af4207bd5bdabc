// Stand-in compiler/simulator/scorer driven by comment directives in the
// source, used by tests and the demo configs.
//
//   compile <src> <out> [tb]   copies src to out; rejects SYNTAX_ERROR
//   run <out>                  obeys @pass P/T, @crash, @hang, @fatal, @exit N,
//                              @print TEXT, @sleep_ms N
//   score <src>                prints the number of "nop" tokens, or @score TEXT
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

std::string slurp(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "fakesim: cannot open " << path << "\n";
    std::exit(2);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Returns the text after "// @name" on the first line carrying it.
bool directive(const std::string& text, const std::string& name, std::string* arg = nullptr) {
  for (const auto& line : lines_of(text)) {
    const auto pos = line.find("// @" + name);
    if (pos == std::string::npos) continue;
    const auto rest = pos + 4 + name.size();
    if (rest < line.size() && !std::isspace(static_cast<unsigned char>(line[rest]))) continue;
    if (arg) *arg = rest < line.size() ? line.substr(rest + 1) : std::string();
    return true;
  }
  return false;
}

void hang() {
  for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
}

int compile(const char* src, const char* out) {
  const std::string text = slurp(src);
  if (directive(text, "compile_hang")) hang();
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find("SYNTAX_ERROR") != std::string::npos) {
      std::cerr << src << ": syntax error, line " << (i + 1) << "\n";
      return 1;
    }
  }
  if (text.find("module") == std::string::npos && text.find("main") == std::string::npos) {
    std::cerr << src << ": syntax error, line 1: no module or main found\n";
    return 1;
  }
  std::ofstream(out, std::ios::binary) << text;
  std::cout << "fakesim: compiled " << lines.size() << " lines\n";
  return 0;
}

int run(const char* artifact) {
  const std::string text = slurp(artifact);
  std::string arg;
  if (directive(text, "sleep_ms", &arg)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(std::stol(arg)));
  }
  for (const auto& line : lines_of(text)) {
    const auto pos = line.find("// @print ");
    if (pos != std::string::npos) std::cout << line.substr(pos + 10) << "\n";
  }
  if (directive(text, "pass", &arg)) {
    const auto slash = arg.find('/');
    const int pass = std::stoi(arg.substr(0, slash));
    const int total = std::stoi(arg.substr(slash + 1));
    for (int i = 1; i <= total; ++i) {
      std::cout << "TESTCASE " << i << ": " << (i <= pass ? "PASS" : "FAIL") << "\n";
    }
  }
  std::cout.flush();
  if (directive(text, "hang")) hang();
  if (directive(text, "crash")) {
    std::cout << "FATAL: simulated crash" << std::endl;
    std::abort();
  }
  if (directive(text, "fatal")) std::cout << "FATAL: assertion failed" << std::endl;
  if (directive(text, "exit", &arg)) return std::stoi(arg);
  return 0;
}

int score(const char* src) {
  const std::string text = slurp(src);
  std::string arg;
  if (directive(text, "sleep_ms", &arg)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(std::stol(arg)));
  }
  if (directive(text, "score_exit", &arg)) return std::stoi(arg);
  if (directive(text, "score", &arg)) {
    std::cout << arg << "\n";
    return 0;
  }
  std::size_t count = 0;
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  for (std::size_t pos = text.find("nop"); pos != std::string::npos; pos = text.find("nop", pos + 1)) {
    const bool left = pos == 0 || !is_word(text[pos - 1]);
    const bool right = pos + 3 >= text.size() || !is_word(text[pos + 3]);
    if (left && right) ++count;
  }
  std::cout << "nop count: " << count << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  if (mode == "compile" && argc >= 4) return compile(argv[2], argv[3]);
  if (mode == "run" && argc >= 3) return run(argv[2]);
  if (mode == "score" && argc >= 3) return score(argv[2]);
  std::cerr << "usage: chiploop-fakesim compile <src> <out> [tb] | run <out> | score <src>\n";
  return 2;
}
