#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "dmobo/archive.hpp"

using namespace dmobo;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const SearchSpace> golden_space() {
  return std::make_shared<const SearchSpace>(std::vector<ParameterSpec>{
      ParameterSpec::continuous("x", 0, 1), ParameterSpec::integer("n", 1, 10),
      ParameterSpec::categorical("opt", {"adam", "sgd"})});
}

std::vector<Trial> golden_trials() {
  Trial a;
  a.config.values = {0.25, std::int64_t{3}, std::string("sgd")};
  a.outcome = ObjectiveVector{0.5, 1.5};
  a.t_complete = 1.0;
  Trial b;
  b.config.values = {0.75, std::int64_t{10}, std::string("adam")};
  b.outcome = FailureMarker{"training diverged"};
  b.agent_rank = 1;
  b.local_step = 4;
  b.t_submit = 2.5;
  b.t_complete = 3.0;
  b.kappa_used = 0.721;
  return {a, b};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_file(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dmobo_" + name + "_" + std::to_string(::getpid()));
  fs::remove(p);
  return p;
}

Trial simple(int rank, std::int64_t step) {
  Trial t;
  t.config.values = {0.5, std::int64_t{1}, std::string("adam")};
  t.outcome = ObjectiveVector{double(rank), double(step)};
  t.agent_rank = rank;
  t.local_step = step;
  return t;
}

}  // namespace

TEST(Format, GoldenFile) {
  const fs::path golden = fs::path(DMOBO_TEST_DATA_DIR) / "archive_golden.jsonl";
  auto space = golden_space();
  const auto out = temp_file("golden");
  write_archive_jsonl(out, *space, golden_trials());
  EXPECT_EQ(slurp(out), slurp(golden));
  EXPECT_EQ(read_archive_jsonl(golden, *space), golden_trials());
  fs::remove(out);
}

TEST(Format, NullSpaceSkipsConfig) {
  const fs::path golden = fs::path(DMOBO_TEST_DATA_DIR) / "archive_golden.jsonl";
  auto trials = read_archive_jsonl(golden, nullptr);
  ASSERT_EQ(trials.size(), 2u);
  EXPECT_TRUE(trials[0].config.values.empty());
  EXPECT_EQ(std::get<ObjectiveVector>(trials[0].outcome), (ObjectiveVector{0.5, 1.5}));
}

TEST(Format, MalformedRecordIsStructural) {
  auto space = golden_space();
  EXPECT_THROW(trial_from_line(*space, "{not json"), StructuralError);
  EXPECT_THROW(trial_from_line(*space, R"({"agent_rank":0})"), StructuralError);
}

TEST(MemoryArchive, CursorsDeliverEachEntryOnce) {
  MemoryArchive a;
  auto r1 = a.register_reader();
  a.append(simple(0, 0));
  a.append(simple(0, 1));
  auto r2 = a.register_reader();
  EXPECT_EQ(a.read_new(r1).size(), 2u);
  EXPECT_TRUE(a.read_new(r1).empty());
  a.append(simple(1, 0));
  EXPECT_EQ(a.read_new(r1).size(), 1u);
  auto all = a.read_new(r2);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[2].agent_rank, 1);
  EXPECT_EQ(a.size(), 3u);
  EXPECT_THROW(a.read_new(99), std::out_of_range);
}

TEST(MemoryArchive, ConcurrentAppendsAreLinearizable) {
  MemoryArchive a;
  const int writers = 4, per = 500;
  std::vector<ReaderId> readers;
  for (int i = 0; i < writers; ++i) readers.push_back(a.register_reader());
  std::vector<std::vector<Trial>> seen(writers);
  std::vector<std::thread> threads;
  for (int w = 0; w < writers; ++w)
    threads.emplace_back([&, w] {
      for (int s = 0; s < per; ++s) {
        a.append(simple(w, s));
        auto got = a.read_new(readers[w]);
        seen[w].insert(seen[w].end(), got.begin(), got.end());
      }
      auto got = a.read_new(readers[w]);
      seen[w].insert(seen[w].end(), got.begin(), got.end());
    });
  for (auto& t : threads) t.join();
  const auto snap = a.snapshot();
  ASSERT_EQ(snap.size(), std::size_t(writers * per));
  for (int w = 0; w < writers; ++w) {
    auto rest = a.read_new(readers[w]);
    seen[w].insert(seen[w].end(), rest.begin(), rest.end());
    EXPECT_EQ(seen[w], snap);
  }
}

TEST(MemoryArchive, MirrorsToFile) {
  auto space = golden_space();
  const auto path = temp_file("mirror");
  {
    MemoryArchive a(space, path);
    for (const auto& t : golden_trials()) a.append(t);
  }
  EXPECT_EQ(slurp(path), slurp(fs::path(DMOBO_TEST_DATA_DIR) / "archive_golden.jsonl"));
  fs::remove(path);
}

TEST(FileArchive, SharedBetweenInstances) {
  auto space = golden_space();
  const auto path = temp_file("file");
  FileArchive a(space, path), b(space, path);
  auto rb = b.register_reader();
  a.append(simple(0, 0));
  b.append(simple(1, 0));
  a.append(simple(0, 1));
  auto got = b.read_new(rb);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[1].agent_rank, 1);
  EXPECT_TRUE(b.read_new(rb).empty());
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a.snapshot(), got);
  fs::remove(path);
}

TEST(FileArchive, IgnoresIncompleteTrailingLine) {
  auto space = golden_space();
  const auto path = temp_file("partial");
  FileArchive a(space, path);
  auto r = a.register_reader();
  a.append(simple(0, 0));
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"agent_rank":3,"local_)";
  }
  EXPECT_EQ(a.read_new(r).size(), 1u);
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"(step":0,"config":{"x":0.5,"n":1,"opt":"adam"},"objectives":[1],"t_submit":0,"t_complete":0,"kappa_used":null})"
        << '\n';
  }
  auto rest = a.read_new(r);
  ASSERT_EQ(rest.size(), 1u);
  EXPECT_EQ(rest[0].agent_rank, 3);
  fs::remove(path);
}
