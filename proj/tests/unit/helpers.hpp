#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "corpuskit/observer.hpp"
#include "corpuskit/sim.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline const corpuskit::sim::Scenario& mini() {
  static const corpuskit::sim::Scenario s = corpuskit::sim::build_scenario(corpuskit::sim::preset("bundestag-mini"));
  return s;
}

/// A small scenario for tests that want to reason about a handful of events.
inline corpuskit::sim::ScenarioConfig small_config(std::size_t tweets = 500) {
  auto c = corpuskit::sim::preset("bundestag-mini");
  c.name = "small";
  c.tweets = tweets;
  c.public_accounts = 40;
  c.candidates = 12;
  c.emergent.count = 3;
  return c;
}

inline std::vector<corpuskit::AccountRef> refs(const std::vector<corpuskit::sim::Account>& accounts) {
  std::vector<corpuskit::AccountRef> out;
  for (const auto& a : accounts) out.push_back({a.id, a.screen_name});
  return out;
}

inline corpuskit::Interval whole(const corpuskit::sim::Scenario& s) { return {s.start(), s.end()}; }

inline corpuskit::ObserverSnapshot observe(const corpuskit::CorpusDefinition& d, corpuskit::StreamSource& src,
                                           corpuskit::CorpusStore& store, corpuskit::ObserverOptions o = {}) {
  auto h = corpuskit::run_observer(d, src, store, std::move(o));
  h->wait_drained();
  return h->stop();
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("corpuskit-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace testing_support
