#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "temp_dir.hpp"
#include "xgad/checkpoint.hpp"
#include "xgad/dataset.hpp"
#include "xgad/synthetic.hpp"
#include "xgad/tsv.hpp"

namespace xgad {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

void write_fixture(const fs::path& dir, const std::string& edges) {
  fs::create_directories(dir);
  write_file(dir / "meta.json",
             R"({"name": "tiny", "num_nodes": 4, "num_attrs": 2, "num_edges": 3,
                 "num_anomalies": 1, "directed": false})");
  write_file(dir / "edges.tsv", edges);
  write_file(dir / "features.tsv", "0.5\t1\n-1\t2\n3\t0\n0\t0.25\n");
  write_file(dir / "labels.tsv", "0\n0\n1\n0\n");
}

TEST(LoadDataset, WellFormedFixture) {
  TempDir tmp("load");
  write_fixture(tmp.path(), "src\tdst\n0\t1\n1\t2\n2\t3\n");
  const LoadedDataset d = load_dataset(tmp.path());
  EXPECT_EQ(d.graph.num_nodes, 4);
  EXPECT_EQ(d.graph.num_edges(), 3);
  EXPECT_EQ(d.graph.feature_dim(), 2);
  EXPECT_EQ(d.graph.features(3, 1), 0.25);
  EXPECT_EQ(d.descriptor, describe(d.graph, "tiny"));
  EXPECT_EQ(d.descriptor.num_anomalies, 1);
}

TEST(LoadDataset, OutOfRangeEdgeNamesTheLine) {
  TempDir tmp("range");
  write_fixture(tmp.path(), "src\tdst\n0\t1\n1\t4\n2\t3\n");
  try {
    load_dataset(tmp.path());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.file().filename(), "edges.tsv");
    EXPECT_NE(std::string(e.what()).find("edges.tsv"), std::string::npos);
  }
}

TEST(LoadDataset, OtherErrors) {
  TempDir tmp("errors");
  write_fixture(tmp / "count", "src\tdst\n0\t1\n1\t2\n");
  EXPECT_THROW(load_dataset(tmp / "count"), FormatError);
  write_fixture(tmp / "dup", "src\tdst\n0\t1\n0\t1\n2\t3\n");
  EXPECT_THROW(load_dataset(tmp / "dup"), FormatError);
  write_fixture(tmp / "header", "0\t1\n1\t2\n2\t3\n");
  EXPECT_THROW(load_dataset(tmp / "header"), FormatError);
  write_fixture(tmp / "label", "src\tdst\n0\t1\n1\t2\n2\t3\n");
  write_file(tmp / "label" / "labels.tsv", "0\n0\n2\n0\n");
  EXPECT_THROW(load_dataset(tmp / "label"), FormatError);
  write_fixture(tmp / "bad-number", "src\tdst\n0\t1\n1\t2\n2\t3\n");
  write_file(tmp / "bad-number" / "features.tsv", "0.5\t1\n-1\tx\n3\t0\n0\t0.25\n");
  EXPECT_THROW(load_dataset(tmp / "bad-number"), FormatError);
  EXPECT_THROW(load_dataset(tmp / "missing"), IoError);
}

AttributedGraph random_labelled_graph(int n, std::uint64_t seed) {
  RandomStream rng(seed);
  AttributedGraph g;
  g.num_nodes = n;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.bernoulli(0.2)) g.edges.push_back({u, v});
  std::reverse(g.edges.begin(), g.edges.end());  // unsorted on purpose
  g.features = Matrix(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) g.features(i, j) = rng.normal(0, 1) * std::pow(10.0, j * 3 - 3);
  g.labels = std::vector<int>(n, 0);
  (*g.labels)[1] = 1;
  return g;
}

TEST(SaveDataset, RoundTripAndDeterminism) {
  TempDir tmp("roundtrip");
  const AttributedGraph g = random_labelled_graph(15, 4);
  save_dataset(g, "rt", tmp / "a");
  save_dataset(g, "rt", tmp / "b");
  const LoadedDataset back = load_dataset(tmp / "a");
  std::vector<Edge> sorted = g.edges;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(back.graph.edges, sorted);
  EXPECT_LE((back.graph.features - g.features).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.graph.labels, g.labels);
  for (const char* f : {"meta.json", "edges.tsv", "features.tsv", "labels.tsv"}) {
    EXPECT_EQ(read_file(tmp / "a" / f), read_file(tmp / "b" / f)) << f;
  }
}

TEST(SaveDataset, EmptyEdgeGraph) {
  TempDir tmp("empty");
  AttributedGraph g = random_labelled_graph(5, 1);
  g.edges.clear();
  save_dataset(g, "empty", tmp.path());
  EXPECT_EQ(read_file(tmp / "edges.tsv"), "src\tdst\n");
  EXPECT_EQ(load_dataset(tmp.path()).graph.num_edges(), 0);
}

TEST(Split, SizesAndPartition) {
  for (auto [n, tr, va, te] : {std::tuple{10, 4, 2, 4}, {11, 5, 2, 4}, {12, 5, 3, 4}, {13, 6, 2, 5},
                               {14, 6, 3, 5}, {400, 160, 80, 160}, {5, 2, 1, 2}}) {
    const SplitMasks s = make_split(n, 3);
    EXPECT_EQ(static_cast<int>(s.train.size()), tr) << n;
    EXPECT_EQ(static_cast<int>(s.validation.size()), va) << n;
    EXPECT_EQ(static_cast<int>(s.test.size()), te) << n;
    std::vector<int> all = s.train;
    all.insert(all.end(), s.validation.begin(), s.validation.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    for (int i = 0; i < n; ++i) ASSERT_EQ(all[i], i);
  }
  EXPECT_THROW(make_split(4, 0), std::invalid_argument);
}

TEST(Split, DeterministicAndSeedSensitive) {
  EXPECT_EQ(make_split(50, 9).train, make_split(50, 9).train);
  EXPECT_NE(make_split(50, 9).train, make_split(50, 10).train);
  TempDir tmp("split");
  const SplitMasks s = make_split(30, 2);
  save_split(s, tmp / "split.json");
  const SplitMasks back = load_split(tmp / "split.json");
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.validation, s.validation);
  EXPECT_EQ(back.test, s.test);
}

TEST(FewShot, ExhaustiveAndDeterministic) {
  const std::vector<int> train = {0, 2, 4, 6, 8};
  const std::vector<int> labels = {1, 0, 0, 1, 0, 0, 1, 0, 0};  // 3 is off the train mask
  auto label_of = [&](int i) { return labels[i]; };
  EXPECT_EQ(sample_few_shot(train, label_of, 2, 5), (std::vector<int>{0, 6}));
  const auto one = sample_few_shot(train, label_of, 1, 7);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(labels[one[0]] == 1);
  EXPECT_EQ(one, sample_few_shot(train, label_of, 1, 7));
  EXPECT_THROW(sample_few_shot(train, label_of, 3, 1), std::invalid_argument);
}

TEST(FewShot, OnlyQueriesTrainNodes) {
  const std::vector<int> train = {1, 3};
  std::vector<int> asked;
  sample_few_shot(train, [&](int i) { asked.push_back(i); return 1; }, 1, 0);
  std::sort(asked.begin(), asked.end());
  asked.erase(std::unique(asked.begin(), asked.end()), asked.end());
  EXPECT_EQ(asked, train);
}

// Pearson chi-square against the uniform distribution over eligible
// anomalies (K = 1) and over anomaly pairs (K = 2); critical values at the
// 0.999 quantile for 3 and 5 degrees of freedom.
TEST(FewShot, UniformOverSeeds) {
  const std::vector<int> train = {0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<int> labels = {1, 0, 1, 0, 0, 1, 0, 1};
  auto label_of = [&](int i) { return labels[i]; };
  std::map<std::vector<int>, int> single, pair;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    ++single[sample_few_shot(train, label_of, 1, seed)];
    ++pair[sample_few_shot(train, label_of, 2, seed)];
  }
  auto chi2 = [](const std::map<std::vector<int>, int>& counts, int cells) {
    const double expect = 10000.0 / cells;
    double s = 0;
    for (const auto& [k, c] : counts) s += (c - expect) * (c - expect) / expect;
    return s;
  };
  ASSERT_EQ(single.size(), 4u);
  ASSERT_EQ(pair.size(), 6u);
  EXPECT_LT(chi2(single, 4), 16.27);
  EXPECT_LT(chi2(pair, 6), 20.52);
}

TEST(Synthetic, AnomalyCountsAndMechanisms) {
  SyntheticPairConfig c;
  const SyntheticPair p = gen_synthetic_pair(c);
  for (const SyntheticGraph* g : {&p.source, &p.target}) {
    EXPECT_EQ(g->graph.num_anomalies(), std::lround(c.anomaly_fraction * c.num_nodes));
    EXPECT_FALSE(g->structural.empty());
    EXPECT_FALSE(g->contextual.empty());
    EXPECT_TRUE(validate_graph(g->graph).empty());
    EXPECT_EQ(static_cast<int>(g->structural.size() + g->contextual.size()),
              g->graph.num_anomalies());
  }
  EXPECT_EQ(p.source.graph.feature_dim(), 24);
  EXPECT_EQ(p.target.graph.feature_dim(), 32);

  c.anomaly_fraction = 0.1;
  c.num_nodes = 123;
  const SyntheticPair q = gen_synthetic_pair(c);
  EXPECT_EQ(q.target.graph.num_anomalies(), std::lround(0.1 * 123));
}

TEST(Synthetic, StructuralAnomaliesAboveMedianDegree) {
  const SyntheticPair p = gen_synthetic_pair(SyntheticPairConfig{});
  for (const SyntheticGraph* g : {&p.source, &p.target}) {
    std::vector<int> degree(g->graph.num_nodes, 0);
    for (const Edge& e : g->graph.edges) ++degree[e.u], ++degree[e.v];
    std::vector<int> sorted = degree;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (int node : g->structural) EXPECT_GT(degree[node], median) << node;
  }
}

// With no shift and equal widths, per-block feature means of the two graphs
// agree in expectation: the seed-averaged difference stays within three
// standard errors in every block and coordinate.
TEST(Synthetic, ZeroShiftMeansAgree) {
  SyntheticPairConfig c;
  c.num_nodes = 120;
  c.source_dim = c.target_dim = 6;
  c.shift_scale = 1.0;
  c.shift_offset = 0.0;
  const int blocks = c.num_blocks;
  std::vector<Matrix> diffs;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    c.seed = seed;
    const SyntheticPair p = gen_synthetic_pair(c);
    Matrix d = Matrix::Zero(blocks, 6);
    std::vector<int> cs(blocks, 0), ct(blocks, 0);
    for (int i = 0; i < c.num_nodes; ++i) {
      d.row(p.source.block[i]) += p.source.graph.features.row(i) / 1.0;
      ++cs[p.source.block[i]];
    }
    for (int b = 0; b < blocks; ++b) d.row(b) /= cs[b];
    Matrix t = Matrix::Zero(blocks, 6);
    for (int i = 0; i < c.num_nodes; ++i) {
      t.row(p.target.block[i]) += p.target.graph.features.row(i);
      ++ct[p.target.block[i]];
    }
    for (int b = 0; b < blocks; ++b) t.row(b) /= ct[b];
    diffs.push_back(d - t);
  }
  Matrix mean = Matrix::Zero(blocks, 6);
  for (const Matrix& d : diffs) mean += d / 100.0;
  Matrix var = Matrix::Zero(blocks, 6);
  for (const Matrix& d : diffs) var += (d - mean).cwiseAbs2() / 99.0;
  const Matrix se = (var / 100.0).cwiseSqrt();
  for (int b = 0; b < blocks; ++b)
    for (int k = 0; k < 6; ++k) EXPECT_LE(std::abs(mean(b, k)), 3 * se(b, k)) << b << "," << k;
}

TEST(Synthetic, ByteIdenticalSaves) {
  TempDir tmp("synth");
  const SyntheticPair a = gen_synthetic_pair(SyntheticPairConfig{});
  const SyntheticPair b = gen_synthetic_pair(SyntheticPairConfig{});
  save_dataset(a.target.graph, "t", tmp / "a");
  save_dataset(b.target.graph, "t", tmp / "b");
  for (const char* f : {"meta.json", "edges.tsv", "features.tsv", "labels.tsv"}) {
    EXPECT_EQ(read_file(tmp / "a" / f), read_file(tmp / "b" / f)) << f;
  }
}

TEST(Synthetic, ConfigValidationAndJson) {
  SyntheticPairConfig c;
  c.p_intra = 1.5;
  EXPECT_THROW(gen_synthetic_pair(c), std::invalid_argument);
  c = {};
  c.anomaly_fraction = 0.3;
  EXPECT_THROW(validate_config(c), std::invalid_argument);

  SyntheticPairConfig d;
  d.num_nodes = 77;
  d.shift_offset = -0.25;
  const SyntheticPairConfig back = synthetic_config_from_json(synthetic_config_to_json(d));
  EXPECT_EQ(back.num_nodes, 77);
  EXPECT_EQ(back.shift_offset, -0.25);
  try {
    synthetic_config_from_json("{\"num_nodes\": 4,,}", "cfg.json");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.json"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(Tsv, DoubleRoundTrip) {
  RandomStream rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal(0, 1) * std::pow(10.0, rng.uniform_int(-300, 300));
    EXPECT_EQ(parse_double(format_double(v), "x", 1), v);
  }
  EXPECT_THROW(parse_double("1.5x", "x", 1), FormatError);
  EXPECT_THROW(parse_integer("", "x", 1), FormatError);
}

TEST(Tsv, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

ModelState small_state(std::uint64_t seed) {
  RandomStream rng(seed);
  ModelShape shape{EncoderShape{5, 7, 6, 4}, 3};
  ModelState s = init_model(shape, rng);
  s.centers.shared = Vector::Constant(4, 0.1);
  return s;
}

TEST(Checkpoint, RoundTrip) {
  TempDir tmp("ckpt");
  const ModelState s = small_state(1);
  save_checkpoint(s, tmp / "c", {42, "joint"});
  CheckpointInfo info;
  const ModelState back = load_checkpoint(tmp / "c", &info);
  EXPECT_LE(max_abs_difference(s, back), 1e-12);
  EXPECT_EQ(info.seed, 42u);
  EXPECT_EQ(info.phase, "joint");
  EXPECT_EQ(back.use_prompts, s.use_prompts);
}

TEST(Checkpoint, DetectsTampering) {
  TempDir tmp("tamper");
  const ModelState s = small_state(2);
  save_checkpoint(s, tmp / "a", {1, "self"});

  fs::copy(tmp / "a", tmp / "b", fs::copy_options::recursive);
  std::string manifest = read_file(tmp / "b" / "manifest.json");
  manifest.replace(manifest.find("\"num_bases\": 3"), 14, "\"num_bases\": 4");
  write_file(tmp / "b" / "manifest.json", manifest);
  EXPECT_THROW(load_checkpoint(tmp / "b"), CheckpointError);

  fs::copy(tmp / "a", tmp / "c", fs::copy_options::recursive);
  std::string w = read_file(tmp / "c" / "layer1.w_self.tsv");
  w[0] = w[0] == '1' ? '2' : '1';
  write_file(tmp / "c" / "layer1.w_self.tsv", w);
  EXPECT_THROW(load_checkpoint(tmp / "c"), CheckpointError);

  fs::copy(tmp / "a", tmp / "d", fs::copy_options::recursive);
  fs::remove(tmp / "d" / "center.shared.tsv");
  EXPECT_THROW(load_checkpoint(tmp / "d"), CheckpointError);

  EXPECT_THROW(load_checkpoint(tmp / "none"), CheckpointError);
}

}  // namespace
}  // namespace xgad
