#include <doctest.h>

#include <cmath>
#include <limits>

#include "moluq/chem/fingerprint.hpp"
#include "moluq/chem/smiles.hpp"

using moluq::chem::circular_fingerprint;
using moluq::chem::Fingerprint;
using moluq::chem::parse_smiles;
using moluq::chem::tanimoto_distance;

namespace {

Fingerprint from_bits(std::initializer_list<int> bits, int length = 64) {
    Fingerprint fp;
    fp.length = length;
    fp.words.assign((static_cast<std::size_t>(length) + 63) / 64, 0);
    for (int b : bits) fp.set(b);
    return fp;
}

}  // namespace

TEST_CASE("fingerprint determinism and basic shape") {
    const auto m = parse_smiles("CC(=O)Oc1ccccc1C(=O)O");
    const Fingerprint a = circular_fingerprint(m, 2048, 3);
    const Fingerprint b = circular_fingerprint(m, 2048, 3);
    CHECK(a == b);
    CHECK(a.length == 2048);
    CHECK(a.radius == 3);
    CHECK(a.popcount() >= 1);
}

TEST_CASE("single atom sets only its radius-0 bit") {
    // No edges exist, so every radius repeats the same environment set.
    const auto m = parse_smiles("C");
    const Fingerprint r0 = circular_fingerprint(m, 2048, 0);
    const Fingerprint r3 = circular_fingerprint(m, 2048, 3);
    CHECK(r0.popcount() == 1);
    CHECK(r3.set_bits() != std::vector<int>{});
    // All bits of the radius-3 fingerprint stem from iterating the one atom.
    for (int bit : r0.set_bits()) CHECK(r3.test(bit));
}

TEST_CASE("methane and ethane differ") {
    const Fingerprint a = circular_fingerprint(parse_smiles("C"), 2048, 3);
    const Fingerprint b = circular_fingerprint(parse_smiles("CC"), 2048, 3);
    CHECK(a != b);
}

TEST_CASE("identical molecules yield identical bits regardless of atom order") {
    const Fingerprint a = circular_fingerprint(parse_smiles("OCC"), 2048, 3);
    const Fingerprint b = circular_fingerprint(parse_smiles("CCO"), 2048, 3);
    CHECK(a == b);
}

TEST_CASE("tanimoto distance") {
    const Fingerprint x = from_bits({1, 2, 3});
    const Fingerprint y = from_bits({2, 3, 4});
    // Set arithmetic: |x & y| = 2, |x | y| = 4, -log2(2/4) = 1.
    CHECK(tanimoto_distance(x, y) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(tanimoto_distance(x, x) == 0.0);

    const Fingerprint z = from_bits({10, 11});
    CHECK(std::isinf(tanimoto_distance(x, z)));

    const Fingerprint empty1 = from_bits({});
    const Fingerprint empty2 = from_bits({});
    CHECK(tanimoto_distance(empty1, empty2) == 0.0);

    const Fingerprint other_len = from_bits({1}, 128);
    CHECK_THROWS(tanimoto_distance(x, other_len));
}

TEST_CASE("tanimoto symmetry and zero-iff-identical on random fingerprints") {
    std::uint64_t state = 42;
    auto next = [&state]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return state >> 33;
    };
    for (int trial = 0; trial < 50; ++trial) {
        Fingerprint a = from_bits({}, 256);
        Fingerprint b = from_bits({}, 256);
        for (int i = 0; i < 30; ++i) {
            a.set(static_cast<int>(next() % 256));
            b.set(static_cast<int>(next() % 256));
        }
        const double ab = tanimoto_distance(a, b);
        const double ba = tanimoto_distance(b, a);
        CHECK(ab == ba);
        if (a == b) {
            CHECK(ab == 0.0);
        } else {
            CHECK(ab > 0.0);
        }
    }
}
