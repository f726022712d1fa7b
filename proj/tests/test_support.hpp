#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "valsim/config.hpp"
#include "valsim/values.hpp"

namespace valsim::testing {

inline std::string data_file(const std::string& name) { return std::string(VALSIM_TEST_DATA_DIR) + "/" + name; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("valsim-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Dimension membership written out independently of the library's table:
// 0 self-enhancement, 1 self-transcendence, 2 openness, 3 conservation.
inline int oracle_dimension(BasicValue v, bool hedonism_in_self_enhancement = false) {
  switch (v) {
    case BasicValue::power:
    case BasicValue::achievement: return 0;
    case BasicValue::universalism:
    case BasicValue::benevolence: return 1;
    case BasicValue::hedonism: return hedonism_in_self_enhancement ? 0 : 2;
    case BasicValue::stimulation:
    case BasicValue::self_direction: return 2;
    case BasicValue::tradition:
    case BasicValue::conformity:
    case BasicValue::security: return 3;
  }
  return -1;
}

inline bool oracle_opposed(int a, int b) { return a != b && a / 2 == b / 2; }

// 0 identical, 1 same dimension, 2 medium, 3 low.
inline int oracle_similarity(BasicValue a, BasicValue b, bool hedonism_in_self_enhancement = false) {
  if (a == b) return 0;
  const int da = oracle_dimension(a, hedonism_in_self_enhancement);
  const int db = oracle_dimension(b, hedonism_in_self_enhancement);
  if (da == db) return 1;
  return oracle_opposed(da, db) ? 3 : 2;
}

inline ProviderConfig scripted_provider(const std::string& name, double alignment = 1.0) {
  ProviderConfig p;
  p.name = name;
  p.adapter = "scripted";
  p.scripted.alignment = alignment;
  return p;
}

// Config over the bundled data files with one aligned scripted provider.
inline Config test_config(const std::filesystem::path& output_dir) {
  Config c;
  c.campaign_id = "test";
  c.providers.push_back(scripted_provider("scripted"));
  c.data.values = data_file("values.jsonl");
  c.data.templates = data_file("templates.jsonl");
  c.data.instruments = data_file("instruments.sample.jsonl");
  c.output_dir = output_dir.string();
  c.workers = 2;
  for (const char* slot : {"en.basic", "en.higher", "ja.basic", "ja.higher"})
    c.dialogue.conditions[slot] = DialogueCondition{Person::second, Placement::system, true};
  return c;
}

}  // namespace valsim::testing
