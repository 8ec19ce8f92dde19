#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "moluq/chem/logp.hpp"
#include "moluq/chem/scaffold.hpp"
#include "moluq/chem/smiles.hpp"
#include "moluq/common/error.hpp"
#include "moluq/data/dataset.hpp"
#include "moluq/data/split.hpp"

using namespace moluq;
using data::Dataset;
using data::SplitAssignment;

namespace {

std::filesystem::path write_temp_csv(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

Dataset chain_dataset(std::size_t n) {
    // CO, CCO, CCCO, ... all distinct and acyclic.
    Dataset d;
    d.name = "chains";
    std::string smiles = "C";
    for (std::size_t i = 0; i < n; ++i) {
        d.records.push_back({smiles + "O", static_cast<double>(i)});
        smiles += "C";
    }
    return d;
}

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) {
    return {v.begin(), v.end()};
}

void check_partition(const SplitAssignment& s, std::size_t n) {
    auto train = as_set(s.train);
    auto val = as_set(s.validation);
    auto test = as_set(s.test);
    CHECK(train.size() + val.size() + test.size() == n);
    std::set<std::size_t> all;
    all.insert(train.begin(), train.end());
    all.insert(val.begin(), val.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == n);  // disjoint and exhaustive
    if (!all.empty()) {
        CHECK(*all.rbegin() == n - 1);
    }
}

}  // namespace

TEST_CASE("load_csv happy path") {
    const auto path = write_temp_csv("moluq_ok.csv",
                                     "smiles,target\n"
                                     "CCO,1.5\n"
                                     "CCC,-0.25\n"
                                     "c1ccccc1,2.0\n");
    const auto report = data::load_csv(path.string());
    CHECK(report.dataset.size() == 3);
    CHECK(report.rejected.empty());
    CHECK(report.dataset.name == "moluq_ok");
    CHECK(report.dataset.records[0].target == 1.5);
}

TEST_CASE("load_csv rejects bad SMILES with line numbers") {
    const auto path = write_temp_csv("moluq_bad.csv",
                                     "smiles,target\n"
                                     "CCO,1.0\n"
                                     "C1CC,2.0\n"
                                     "CCC,3.0\n");
    const auto report = data::load_csv(path.string());
    CHECK(report.dataset.size() == 2);
    REQUIRE(report.rejected.size() == 1);
    CHECK(report.rejected[0].line == 3);
    CHECK(report.rejected[0].smiles == "C1CC");
}

TEST_CASE("load_csv dedups keep-first with a warning") {
    const auto path = write_temp_csv("moluq_dup.csv",
                                     "smiles,target\n"
                                     "CCO,1.0\n"
                                     "CCO,9.0\n"
                                     "CCC,3.0\n");
    const auto report = data::load_csv(path.string());
    CHECK(report.dataset.size() == 2);
    CHECK(report.dataset.records[0].target == 1.0);  // first row wins
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("duplicate") != std::string::npos);
}

TEST_CASE("load_csv error paths") {
    const auto empty = write_temp_csv("moluq_empty.csv", "");
    CHECK_THROWS_AS(data::load_csv(empty.string()), DataError);

    const auto badheader = write_temp_csv("moluq_hdr.csv", "a,b\nCCO,1\n");
    CHECK_THROWS_AS(data::load_csv(badheader.string()), DataError);

    const auto badnum = write_temp_csv("moluq_num.csv", "smiles,target\nCCO,abc\n");
    CHECK_THROWS_AS(data::load_csv(badnum.string()), DataError);
}

TEST_CASE("random split sizes and determinism") {
    const Dataset d = chain_dataset(100);
    const SplitAssignment s = data::random_split(d, 7);
    CHECK(s.train.size() == 50);
    CHECK(s.validation.size() == 20);
    CHECK(s.test.size() == 30);
    check_partition(s, 100);

    const SplitAssignment again = data::random_split(d, 7);
    CHECK(s.train == again.train);
    CHECK(s.validation == again.validation);
    CHECK(s.test == again.test);
}

TEST_CASE("eight seeds give pairwise distinct test sets") {
    const Dataset d = chain_dataset(1000);
    std::vector<std::set<std::size_t>> tests;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        tests.push_back(as_set(data::random_split(d, seed).test));
    }
    for (std::size_t i = 0; i < tests.size(); ++i) {
        for (std::size_t j = i + 1; j < tests.size(); ++j) {
            CHECK(tests[i] != tests[j]);
        }
    }
}

TEST_CASE("random split rejects tiny datasets") {
    CHECK_THROWS_AS(data::random_split(chain_dataset(5), 0), DataError);
}

TEST_CASE("scaffold split: hand-simulated greedy assignment") {
    // Three clusters, sizes 5 (benzene scaffold), 3 (cyclohexane), 2
    // (pyridine). Greedy order 5,3,2; deficits put 5 in train, 3 in test,
    // 2 in validation.
    Dataset d;
    d.name = "clusters";
    const char* benzene[] = {"c1ccccc1", "Cc1ccccc1", "CCc1ccccc1", "CCCc1ccccc1",
                             "Oc1ccccc1"};
    const char* cyclohexane[] = {"C1CCCCC1", "CC1CCCCC1", "OC1CCCCC1"};
    const char* pyridine[] = {"c1ccncc1", "Cc1ccncc1"};
    for (const char* s : benzene) d.records.push_back({s, 0.0});
    for (const char* s : cyclohexane) d.records.push_back({s, 0.0});
    for (const char* s : pyridine) d.records.push_back({s, 0.0});

    const SplitAssignment s = data::scaffold_split(d);
    check_partition(s, 10);
    CHECK(s.train.size() == 5);
    CHECK(s.test.size() == 3);
    CHECK(s.validation.size() == 2);
    CHECK(as_set(s.train) == std::set<std::size_t>{0, 1, 2, 3, 4});
    CHECK(as_set(s.test) == std::set<std::size_t>{5, 6, 7});
    CHECK(as_set(s.validation) == std::set<std::size_t>{8, 9});
}

TEST_CASE("scaffold split never splits a scaffold across partitions") {
    Dataset d;
    const char* scaffolds[] = {"c1ccccc1", "C1CCCCC1", "c1ccncc1", "c1ccc2ccccc2c1",
                               "C1CCNCC1", "c1ccsc1"};
    int idx = 0;
    for (const char* core : scaffolds) {
        for (int i = 0; i < 2 + idx % 4; ++i) {
            std::string s(core);
            d.records.push_back({std::string(i, 'C') + s, 0.0});
            ++idx;
        }
    }
    const SplitAssignment s = data::scaffold_split(d);
    check_partition(s, d.size());

    auto keys_of = [&](const std::vector<std::size_t>& part) {
        std::set<std::string> keys;
        for (auto i : part) {
            keys.insert(chem::murcko_scaffold(chem::parse_smiles(d.records[i].smiles)));
        }
        return keys;
    };
    const auto train_keys = keys_of(s.train);
    const auto val_keys = keys_of(s.validation);
    const auto test_keys = keys_of(s.test);
    for (const auto& k : train_keys) {
        CHECK(val_keys.count(k) == 0);
        CHECK(test_keys.count(k) == 0);
    }
    for (const auto& k : val_keys) CHECK(test_keys.count(k) == 0);
}

TEST_CASE("scaffold split degenerates to train when one scaffold dominates") {
    Dataset d;
    for (int i = 0; i < 12; ++i) {
        d.records.push_back({std::string(i, 'C') + "c1ccccc1", 0.0});
    }
    const SplitAssignment s = data::scaffold_split(d);
    CHECK(s.train.size() == 12);
    CHECK(s.validation.empty());
    CHECK(s.test.empty());
    CHECK(!s.warnings.empty());
}

TEST_CASE("split JSON round trip") {
    const Dataset d = chain_dataset(50);
    const SplitAssignment s = data::random_split(d, 3);
    const auto back = data::split_from_json(data::split_to_json(s));
    CHECK(back.train == s.train);
    CHECK(back.validation == s.validation);
    CHECK(back.test == s.test);
    CHECK(back.seed == s.seed);
    CHECK(back.kind == s.kind);
}

TEST_CASE("generate_clogp_dataset: union with noiseless targets") {
    Dataset a;
    a.records = {{"CCO", 1.0}, {"CCC", 2.0}, {"CCN", 3.0}};
    Dataset b;
    b.records = {{"CCO", 9.0}, {"c1ccccc1", 4.0}, {"CCCl", 5.0}};
    const Dataset merged = data::generate_clogp_dataset({a, b});
    CHECK(merged.size() == 5);
    for (const auto& r : merged.records) {
        const double expect = chem::heuristic_logp(chem::parse_smiles(r.smiles));
        CHECK(r.target == expect);  // bit-exact recompute
    }
    const Dataset again = data::generate_clogp_dataset({a, b});
    for (std::size_t i = 0; i < merged.size(); ++i) {
        CHECK(merged.records[i].target == again.records[i].target);
    }
}

TEST_CASE("standardize_targets population convention and round trip") {
    // {0, 2}: mean 1, population std 1.
    const auto scaler = data::standardize_targets({0.0, 2.0});
    CHECK(scaler.mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(scaler.std == doctest::Approx(1.0).epsilon(1e-15));

    std::uint64_t state = 99;
    for (int i = 0; i < 100; ++i) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        const double y = static_cast<double>(state >> 11) * 0x1.0p-53 * 20.0 - 10.0;
        const double rt = scaler.inverse(scaler.transform(y));
        CHECK(std::abs(rt - y) < 1e-12);
    }

    CHECK_THROWS_AS(data::standardize_targets({3.0, 3.0, 3.0}), DataError);
}
