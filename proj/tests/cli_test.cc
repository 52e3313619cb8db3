// Copyright 2026 The b2b-plc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int status = -1;
  std::string out;  // stdout and stderr interleaved
};

Outcome Exec(const std::string& args) {
  const std::string cmd = std::string(B2B_BINARY) + " " + args + " 2>&1";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("b2b_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* const kSubcommands[] = {"synth-corpus", "simulate", "train", "conceal",
                                    "evaluate", "dump-spec", "rf"};

// flag -> default as documented: bracketed default, "required", or "-".
using FlagTable = std::map<std::string, std::string>;

FlagTable FlagsFromHelp(const std::string& help) {
  FlagTable t;
  static const std::regex line(R"(^\s+(?:-\w,)?--([a-z0-9-]+)([^\n]*))");
  static const std::regex def(R"(\[([^\]]*)\])");
  std::istringstream in(help);
  std::string l;
  while (std::getline(in, l)) {
    std::smatch m;
    if (!std::regex_search(l, m, line) || m[1] == "help") continue;
    const std::string rest = m[2];
    std::smatch d;
    if (std::regex_search(rest, d, def)) {
      t[m[1]] = d[1];
    } else if (rest.find("REQUIRED") != std::string::npos) {
      t[m[1]] = "required";
    } else {
      t[m[1]] = "-";
    }
  }
  return t;
}

std::map<std::string, FlagTable> FlagsFromReadme() {
  std::map<std::string, FlagTable> out;
  static const std::regex row(R"(^\|\s*`?([a-z-]+)`?\s*\|\s*`--([a-z0-9-]+)`\s*\|\s*`?([^|`]*?)`?\s*\|)");
  std::istringstream in(Slurp(B2B_README));
  std::string l;
  while (std::getline(in, l)) {
    std::smatch m;
    if (std::regex_search(l, m, row)) out[m[1]][m[2]] = m[3];
  }
  return out;
}

TEST(Cli, ReadmeFlagTableMatchesHelp) {
  const auto readme = FlagsFromReadme();
  for (const char* sub : kSubcommands) {
    const Outcome help = Exec(std::string(sub) + " --help");
    ASSERT_EQ(help.status, 0) << sub;
    const FlagTable from_help = FlagsFromHelp(help.out);
    ASSERT_FALSE(from_help.empty()) << sub;
    const auto it = readme.find(sub);
    ASSERT_NE(it, readme.end()) << "README has no rows for " << sub;
    EXPECT_EQ(it->second, from_help) << sub;
  }
}

TEST(Cli, ReceptiveField) {
  Outcome r = Exec("rf --kernels 8x2 --strides 2,2,2,1,1");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("162x24"), std::string::npos) << r.out;
  r = Exec("rf --kernels 4x4 --strides 2,2,2,1,1");
  EXPECT_NE(r.out.find("70x70"), std::string::npos) << r.out;
  r = Exec("rf --kernels 3x3 --strides 1");
  EXPECT_NE(r.out.find("3x3"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrorsExitTwo) {
  Outcome r = Exec("rf --bogus");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("error: usage."), std::string::npos) << r.out;
  r = Exec("no-such-subcommand");
  EXPECT_EQ(r.status, 2);

  const fs::path dir = Scratch("usage");
  ASSERT_EQ(Exec("synth-corpus --out " + dir.string() + " --clips 1 --duration 1").status, 0);
  r = Exec("simulate --in " + (dir / "clip_0000.wav").string() + " --out " +
           (dir / "x.wav").string() + " --rate 0");
  EXPECT_EQ(r.status, 2);
  EXPECT_TRUE(std::regex_search(r.out, std::regex(R"(^error: [a-z_.]+: .+$)", std::regex::multiline)))
      << r.out;
}

TEST(Cli, DataErrorsExitThree) {
  const Outcome r = Exec("simulate --in /nonexistent.wav --out /tmp/x.wav --rate 0.2");
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.out.find("error: wav."), std::string::npos) << r.out;
}

TEST(Cli, PipelineKeepsDurationAndIsReproducible) {
  const fs::path dir = Scratch("pipeline");
  const std::string d = dir.string();
  ASSERT_EQ(Exec("synth-corpus --out " + d + "/corpus --clips 10 --duration 1 --seed 4").status, 0);
  const std::string clip = d + "/corpus/clip_0000.wav";
  ASSERT_EQ(Exec("simulate --in " + clip + " --out " + d + "/lossy.wav --trace " + d +
                 "/lossy.trace --rate 0.3 --seed 5")
                .status,
            0);
  const Outcome train = Exec("train --manifest " + d + "/corpus/manifest.txt --out " + d +
                         "/model.ckpt --reduced --epochs 1 --batch 1 --n-g 1 --cycles 1 --seed 6");
  ASSERT_EQ(train.status, 0) << train.out;
  EXPECT_TRUE(fs::exists(d + "/model.ckpt.best"));
  EXPECT_TRUE(fs::exists(d + "/model.ckpt.last"));
  EXPECT_NE(train.out.find("# b2b train"), std::string::npos);

  const std::string conceal = "conceal --ckpt " + d + "/model.ckpt --in " + d + "/lossy.wav --no-dropout --seed 1 --out ";
  const Outcome c = Exec(conceal + d + "/a.wav");
  ASSERT_EQ(c.status, 0) << c.out;
  EXPECT_NE(c.out.find("seconds of audio per second"), std::string::npos) << c.out;
  ASSERT_EQ(Exec(conceal + d + "/b.wav").status, 0);
  EXPECT_EQ(fs::file_size(d + "/a.wav"), fs::file_size(d + "/lossy.wav"));
  EXPECT_EQ(Slurp(d + "/a.wav"), Slurp(d + "/b.wav"));

  ASSERT_EQ(Exec("synth-corpus --out " + d + "/short --clips 1 --duration 0.2").status, 0);
  const Outcome shorty = Exec("conceal --ckpt " + d + "/model.ckpt --in " + d +
                          "/short/clip_0000.wav --out " + d + "/c.wav");
  EXPECT_EQ(shorty.status, 2);
  EXPECT_NE(shorty.out.find("error: conceal.too_short"), std::string::npos) << shorty.out;
}

}  // namespace
