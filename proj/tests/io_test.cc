#include "grm/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "support/format_parsers.hpp"
#include "support/test_util.hpp"

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TEST(Format, SeventeenDigitsRoundTripExactly) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = unif(rng) * std::pow(10.0, (i % 37) - 18);
        const std::string s = grm::io::format_sig17(x);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), x) << s;
    }
}

TEST(Format, CsvQuoting) {
    EXPECT_EQ(grm::io::csv_quote("plain"), "plain");
    EXPECT_EQ(grm::io::csv_quote("a,b"), "\"a,b\"");
    EXPECT_EQ(grm::io::csv_quote("say \"hi\""), "\"say \"\"hi\"\"\"");
    const auto fields = grm::io::split_csv_line("\"a,b\",2,\"say \"\"hi\"\"\"");
    ASSERT_EQ(fields.size(), 3u);
    EXPECT_EQ(fields[0], "a,b");
    EXPECT_EQ(fields[1], "2");
    EXPECT_EQ(fields[2], "say \"hi\"");
}

TEST(MatrixCsv, RoundTripBitExact) {
    testutil::TempDir tmp;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd m(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = unif(rng);
    const std::vector<std::string> names{"plain", "with,comma", "with \"quote\""};
    const auto path = tmp.path() / "m.csv";
    grm::io::write_matrix_csv(path, m, names);
    const auto back = grm::io::read_matrix_csv(path);
    EXPECT_EQ(back.row_names, names);
    EXPECT_EQ(back.col_names, names);
    EXPECT_EQ(back.matrix, m);
}

TEST(RankCsv, HeaderAndRows) {
    testutil::TempDir tmp;
    std::vector<grm::RankedNode> rows{{1, 0, 17, "Leonardo da Vinci", 0.5},
                                      {2, 1, 23, "", 0.25}};
    const auto path = tmp.path() / "ranks.csv";
    grm::io::write_rank_csv(path, rows);
    const auto text = slurp(path);
    EXPECT_EQ(text.substr(0, 32), "K,original_id,title,probability\n");
    EXPECT_NE(text.find("1,17,Leonardo da Vinci,0.5\n"), std::string::npos);
}

TEST(RankTableCsv, LocalRoundTrip) {
    testutil::TempDir tmp;
    std::vector<grm::LocalRankRow> rows{{1, "Vinci", 17, 4, 0.5},
                                        {2, "Monet", 23, 9, 0.25}};
    const auto path = tmp.path() / "enwiki.csv";
    grm::io::write_local_rank_csv(path, rows);
    const auto table = grm::io::read_rank_table_csv(path);
    EXPECT_EQ(table.edition_tag, "enwiki");
    EXPECT_EQ(table.entries.at("Vinci"), 1u);
    EXPECT_EQ(table.entries.at("Monet"), 2u);
}

TEST(Bundle, WriteReadRoundTrip) {
    testutil::TempDir tmp;
    std::mt19937_64 rng(3);
    const auto g = testutil::random_graph(rng, 25, 0.2, 0.2);
    grm::NodeSubset subset;
    subset.indices = {2, 9, 14};
    subset.names = {"alpha", "beta", "gamma"};
    const auto rs = grm::reduce(g, subset, 0.85, {}, 1, "testwiki");
    const auto dir = tmp.path() / "bundle";
    grm::io::write_bundle(dir, rs, {{"note", "round-trip"}});
    const auto back = grm::io::read_bundle(dir);
    EXPECT_EQ(back.subset.names, rs.subset.names);
    EXPECT_EQ(back.edition_tag, "testwiki");
    EXPECT_EQ(back.alpha, rs.alpha);
    EXPECT_EQ(back.lambda_c, rs.lambda_c);
    EXPECT_EQ(back.gr, rs.gr);
    EXPECT_EQ(back.grr, rs.grr);
    EXPECT_EQ(back.gpr, rs.gpr);
    EXPECT_EQ(back.gqrd, rs.gqrd);
    EXPECT_EQ(back.gqrnd, rs.gqrnd);
    EXPECT_EQ(back.tolerances.series_tol, rs.tolerances.series_tol);
    const auto meta_text = slurp(dir / "meta.json");
    EXPECT_NE(meta_text.find("round-trip"), std::string::npos);
}

TEST(ThetaCsv, Layout) {
    testutil::TempDir tmp;
    std::vector<grm::ThetaEntry> entries;
    grm::ThetaEntry top;
    top.name = "Vinci";
    top.theta = 698;
    top.ranks = {std::size_t{2}, std::size_t{1}, std::nullopt};
    entries.push_back(top);
    const std::vector<std::string> tags{"fr", "en", "de"};
    const auto path = tmp.path() / "theta.csv";
    grm::io::write_theta_csv(path, entries, tags);
    EXPECT_EQ(slurp(path), "theta_rank,name,theta,fr,en,de\n1,Vinci,698,2,1,\n");
}

TEST(SensitivityCsv, Layout) {
    testutil::TempDir tmp;
    const std::vector<std::string> names{"FR", "ES"};
    const std::vector<double> d{0.25, -0.5};
    const auto path = tmp.path() / "d.csv";
    grm::io::write_sensitivity_csv(path, names, d);
    EXPECT_EQ(slurp(path), "name,D\nFR,0.25\nES,-0.5\n");
}

grm::FriendshipGraph sample_friendship() {
    grm::FriendshipGraph fg;
    fg.nodes = {"Dürer & co", "B<b>", "C\"q\""};
    fg.edges.push_back({0, 1, 0.125, grm::Dominance::Indirect, grm::Generation::Leader});
    fg.edges.push_back({1, 2, 0.0625, grm::Dominance::Direct, grm::Generation::Closure});
    return fg;
}

TEST(Gexf, RoundTripPreservesEdgeAttributes) {
    const auto fg = sample_friendship();
    const auto doc = testutil::parse_gexf(grm::io::to_gexf(fg));
    ASSERT_EQ(doc.node_labels.size(), 3u);
    EXPECT_EQ(doc.node_labels.at("0"), "Dürer & co");
    EXPECT_EQ(doc.node_labels.at("1"), "B<b>");
    EXPECT_EQ(doc.node_labels.at("2"), "C\"q\"");
    ASSERT_EQ(doc.edges.size(), 2u);
    EXPECT_EQ(doc.edges[0].source, "0");
    EXPECT_EQ(doc.edges[0].target, "1");
    EXPECT_EQ(doc.edges[0].weight, 0.125);
    EXPECT_EQ(doc.edges[0].attvalues.at("dominance"), "indirect");
    EXPECT_EQ(doc.edges[0].attvalues.at("generation"), "leader");
    EXPECT_EQ(doc.edges[1].attvalues.at("dominance"), "direct");
    EXPECT_EQ(doc.edges[1].attvalues.at("generation"), "closure");
}

TEST(Dot, RoundTripPreservesColorAndAttributes) {
    const auto fg = sample_friendship();
    const auto edges = testutil::parse_dot_edges(grm::io::to_dot(fg));
    ASSERT_EQ(edges.size(), 2u);
    EXPECT_EQ(edges[0].source, "Dürer & co");
    EXPECT_EQ(edges[0].target, "B<b>");
    EXPECT_EQ(edges[0].attrs.at("color"), "red");
    EXPECT_EQ(edges[0].attrs.at("generation"), "leader");
    EXPECT_EQ(std::strtod(edges[0].attrs.at("weight").c_str(), nullptr), 0.125);
    EXPECT_EQ(edges[1].attrs.at("color"), "black");
    EXPECT_EQ(edges[1].attrs.at("generation"), "closure");
}

TEST(ExportDeterminism, SameInputsSameBytes) {
    const auto fg = sample_friendship();
    EXPECT_EQ(grm::io::to_gexf(fg), grm::io::to_gexf(fg));
    EXPECT_EQ(grm::io::to_dot(fg), grm::io::to_dot(fg));
}

TEST(Checksum, StableAndContentSensitive) {
    testutil::TempDir tmp;
    const auto a = tmp.file("a.txt", "hello\n");
    const auto b = tmp.file("b.txt", "hello\n");
    const auto c = tmp.file("c.txt", "other\n");
    EXPECT_EQ(grm::io::file_checksum(a), grm::io::file_checksum(b));
    EXPECT_NE(grm::io::file_checksum(a), grm::io::file_checksum(c));
    EXPECT_EQ(grm::io::file_checksum(a).rfind("fnv1a64:", 0), 0u);
}

} // namespace
