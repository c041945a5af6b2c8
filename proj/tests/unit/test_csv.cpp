#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/scoring.hpp"

using namespace mrpval;

TEST(Csv, FormatRoundTripsDoubles) {
    std::mt19937_64 eng(4);
    std::normal_distribution<double> nd(0.0, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double v = nd(eng);
        EXPECT_EQ(csv::parse_double(csv::format(v)), v);
    }
    EXPECT_EQ(csv::format(std::nan("")), "NA");
    EXPECT_TRUE(std::isnan(csv::parse_double("NA")));
}

TEST(Csv, ReadRejectsRaggedRows) {
    std::istringstream in("a,b\n1,2\n3\n");
    EXPECT_THROW(csv::read(in), ParseError);
}

TEST(Csv, MissingColumnThrows) {
    std::istringstream in("a,b\n1,2\n");
    const auto t = csv::read(in);
    EXPECT_EQ(t.column("b"), 1u);
    EXPECT_THROW(t.column("c"), ParseError);
}

TEST(Csv, WriteIfChangedLeavesIdenticalFileAlone) {
    const auto dir = std::filesystem::temp_directory_path() / "mrpval_csv_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "x.csv").string();
    std::filesystem::remove(path);
    EXPECT_TRUE(csv::write_if_changed(path, "a\n1\n"));
    EXPECT_FALSE(csv::write_if_changed(path, "a\n1\n"));
    EXPECT_TRUE(csv::write_if_changed(path, "a\n2\n"));
    std::ifstream in(path);
    std::string s((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(s, "a\n2\n");
}

TEST(Csv, TableRoundTrip) {
    std::mt19937_64 eng(8);
    const auto table = fixtures::random_table(12, eng);
    std::stringstream ss;
    write_table_csv(ss, table);
    const auto back = read_table_csv(ss);
    ASSERT_EQ(back.size(), table.size());
    for (std::size_t j = 0; j < table.size(); ++j) {
        EXPECT_EQ(back.cell(j).levels, table.cell(j).levels);
        EXPECT_EQ(back.cell(j).population_count, table.cell(j).population_count);
        EXPECT_EQ(back.cell(j).true_prob, table.cell(j).true_prob);
        EXPECT_EQ(back.cell(j).sample_count, table.cell(j).sample_count);
        EXPECT_EQ(back.cell(j).sample_successes, table.cell(j).sample_successes);
    }
}

TEST(Csv, DrawsRoundTripTextAndBinary) {
    std::mt19937_64 eng(9);
    const auto m = fixtures::random_draws(7, 5, eng);
    std::stringstream text;
    write_draws_csv(text, m);
    EXPECT_EQ(read_draws_csv(text), m);
    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_draws_binary(bin, m);
    EXPECT_EQ(read_draws_binary(bin), m);
}

TEST(Csv, ScoresRoundTrip) {
    ScoreRecord a;
    a.rep = 3;
    a.model = "bias";
    a.family = Family::CRPS;
    a.variant = Variant::PsisLoco;
    a.target_kind = "level";
    a.target_variable = 2;
    a.target_level = 4;
    a.value = -0.0123456789;
    a.khat_max = 0.71;
    a.flagged = true;
    a.seed = 99;
    ScoreRecord b;
    b.model = "full";
    b.variant = Variant::ReferencePsis;
    b.reference = "precision";
    b.value = 1.5e-7;
    std::stringstream ss;
    write_scores_csv(ss, {a, b});
    const auto back = read_scores_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].rep, 3u);
    EXPECT_EQ(back[0].family, Family::CRPS);
    EXPECT_EQ(back[0].variant, Variant::PsisLoco);
    EXPECT_EQ(back[0].target_variable, 2);
    EXPECT_EQ(back[0].target_level, 4);
    EXPECT_EQ(back[0].value, a.value);
    EXPECT_EQ(back[0].khat_max, 0.71);
    EXPECT_TRUE(back[0].flagged);
    EXPECT_EQ(back[0].seed, 99u);
    EXPECT_EQ(back[1].reference, "precision");
    EXPECT_EQ(back[1].target_variable, -1);
    EXPECT_TRUE(std::isnan(back[1].khat_max));
}

TEST(Csv, VariantNamesRoundTrip) {
    for (auto v : {Variant::TruthDirect, Variant::TruthCellwise, Variant::SampleProxy, Variant::BruteLoco,
                   Variant::PsisLoco, Variant::Reference, Variant::ReferenceLoco, Variant::ReferencePsis,
                   Variant::PartialReference, Variant::Combined, Variant::MeanCellTruth, Variant::MeanCellSample,
                   Variant::MeanCellPsis}) {
        EXPECT_EQ(parse_variant(to_string(v)), v);
    }
    EXPECT_THROW(parse_variant("loo"), ParseError);
    EXPECT_THROW(parse_family("ELPD"), ParseError);
}
