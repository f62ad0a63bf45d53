#include "toica/dag.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace toica;

TEST(Dag, SingleTaskIsBothEntryAndExit) {
  const AppDag dag = generate_random_dag(1, 3, 0.5, 42);
  EXPECT_EQ(dag.n_tasks(), 1);
  EXPECT_TRUE(dag.edges.empty());
  EXPECT_EQ(dag.entry_tasks, std::vector<int>{0});
  EXPECT_EQ(dag.exit_tasks, std::vector<int>{0});
}

TEST(Dag, GeneratorIsDeterministicForFixedSeed) {
  const AppDag a = generate_random_dag(15, 5, 0.3, 7);
  const AppDag b = generate_random_dag(15, 5, 0.3, 7);
  EXPECT_EQ(a.edges, b.edges);
  ASSERT_EQ(a.n_tasks(), b.n_tasks());
  for (int i = 0; i < a.n_tasks(); ++i) {
    EXPECT_EQ(a.tasks[i].input_bits, b.tasks[i].input_bits);
    EXPECT_EQ(a.tasks[i].cycles, b.tasks[i].cycles);
  }
  const AppDag c = generate_random_dag(15, 5, 0.3, 8);
  EXPECT_NE(a.edges, c.edges);
}

TEST(Dag, GeneratedGraphsAreWellFormed) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int n = 2 + static_cast<int>(seed % 24);
    const AppDag dag = generate_random_dag(n, 5, 0.3, seed);
    EXPECT_TRUE(is_topological_order(dag, topological_order(dag)));
    for (int i = 0; i < dag.n_tasks(); ++i) {
      if (!dag.is_entry(i)) EXPECT_GE(dag.preds[i].size(), 1u);
      if (!dag.is_exit(i)) EXPECT_GE(dag.succs[i].size(), 1u);
      EXPECT_GT(dag.tasks[i].input_bits, 0.0);
      EXPECT_GT(dag.tasks[i].cycles, 0.0);
    }
  }
}

TEST(Dag, GeneratorRejectsBadParameters) {
  EXPECT_THROW(generate_random_dag(0, 3, 0.3, 1), std::invalid_argument);
  EXPECT_THROW(generate_random_dag(5, 0, 0.3, 1), std::invalid_argument);
  EXPECT_THROW(generate_random_dag(5, 3, -0.1, 1), std::invalid_argument);
  EXPECT_THROW(generate_random_dag(5, 3, 1.5, 1), std::invalid_argument);
}

TEST(Dag, HealthMonitoringFixtureMatchesDescribedShape) {
  std::ifstream in(std::string(TOICA_TEST_DATA_DIR) + "/health_monitoring.dag");
  ASSERT_TRUE(in.good());
  const AppDag dag = parse_dag(in);
  ASSERT_EQ(dag.n_tasks(), 7);
  // Task v3 (index 2) has predecessors v1, v2 and successors v5, v6.
  EXPECT_EQ(dag.preds[2], (std::vector<int>{0, 1}));
  EXPECT_EQ(dag.succs[2], (std::vector<int>{4, 5}));
  EXPECT_EQ(dag.entry_tasks, (std::vector<int>{0, 1}));
  EXPECT_EQ(dag.exit_tasks, (std::vector<int>{6}));
}

TEST(Dag, FixtureRoundTrip) {
  const AppDag dag = generate_random_dag(12, 4, 0.4, 99, 3);
  std::stringstream buffer;
  write_dag(buffer, dag);
  const AppDag back = parse_dag(buffer);
  EXPECT_EQ(back.terminal_id, dag.terminal_id);
  EXPECT_EQ(back.edges, dag.edges);
  for (int i = 0; i < dag.n_tasks(); ++i) {
    EXPECT_EQ(back.tasks[i].input_bits, dag.tasks[i].input_bits);
    EXPECT_EQ(back.tasks[i].cycles, dag.tasks[i].cycles);
  }
}

TEST(Dag, ParserRejectsCorruptInput) {
  std::stringstream bad_header("noise v1\n");
  EXPECT_THROW(parse_dag(bad_header), std::runtime_error);
  std::stringstream cyclic(
      "toica-dag v1\nterminal 0\ntasks 2\ntask 0 10 10\ntask 1 10 10\n"
      "edges 2\nedge 0 1\nedge 1 0\n");
  EXPECT_THROW(parse_dag(cyclic), std::invalid_argument);
}

TEST(Dag, MakeAppDagValidatesInputs) {
  EXPECT_THROW(make_app_dag(0, {}, {}), std::invalid_argument);
  EXPECT_THROW(make_app_dag(0, {{0, 0.0, 1.0}}, {}), std::invalid_argument);
  EXPECT_THROW(make_app_dag(0, {{0, 1.0, 1.0}, {1, 1.0, 1.0}}, {{0, 2}}), std::invalid_argument);
  EXPECT_THROW(make_app_dag(0, {{0, 1.0, 1.0}, {1, 1.0, 1.0}}, {{0, 1}, {1, 0}}),
               std::invalid_argument);
}

TEST(Dag, TopologicalOrderCoversEveryNodeOnce) {
  const AppDag dag = generate_random_dag(20, 6, 0.25, 5);
  const std::vector<int> order = topological_order(dag);
  EXPECT_TRUE(is_topological_order(dag, order));
  const std::set<int> unique(order.begin(), order.end());
  EXPECT_EQ(unique.size(), order.size());
}
