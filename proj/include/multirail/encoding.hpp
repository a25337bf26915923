// encoding.hpp: combinatorics of the multi-rail code.
//
// K of M parallel chains carry an excitation; the C(M,K) subsets are the
// codewords, ordered lexicographically on their sorted member lists
// (S_1 = {1,2}, S_2 = {1,3}, ...). Binomials are exact big integers so the
// rates stay meaningful far past 64-bit range.

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace multirail {

using BigInt = boost::multiprecision::cpp_int;

inline BigInt binomial(int n, int k) {
    if (n < 0) throw std::invalid_argument("binomial: negative n");
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    BigInt result = 1;
    for (int i = 1; i <= k; ++i) {
        result *= n - k + i;
        result /= i;  // exact at every step
    }
    return result;
}

// log2 of an exact positive integer, accurate to a unit in the last place:
// the top 63 bits convert exactly to long double before the log is taken.
inline double log2_exact(const BigInt& value) {
    if (value <= 0) throw std::invalid_argument("log2_exact: argument must be positive");
    const auto bits = boost::multiprecision::msb(value);  // floor(log2 value)
    if (bits < 63)
        return static_cast<double>(std::log2(static_cast<long double>(value.convert_to<std::uint64_t>())));
    const auto shift = bits - 62;
    const std::uint64_t top = BigInt(value >> shift).convert_to<std::uint64_t>();
    return static_cast<double>(std::log2(static_cast<long double>(top)) +
                               static_cast<long double>(shift));
}

namespace detail {
inline void check_code_params(int rails, int excitations) {
    if (rails < 1) throw std::invalid_argument("rail code: need at least one chain");
    if (excitations < 1 || excitations > rails)
        throw std::invalid_argument("rail code: excitation count must lie in [1, rails]");
}
}  // namespace detail

// Logical qubits per codeword under integer packing: floor(log2 C(M,K)).
inline int qubits(int rails, int excitations) {
    detail::check_code_params(rails, excitations);
    const BigInt words = binomial(rails, excitations);
    return static_cast<int>(boost::multiprecision::msb(words));
}

// Real-valued efficiency log2(C(M,K)) / M.
inline double rate(int rails, int excitations) {
    detail::check_code_params(rails, excitations);
    return log2_exact(binomial(rails, excitations)) / static_cast<double>(rails);
}

// Integer-qubit efficiency floor(log2 C(M,K)) / M; the convention behind
// "10 codewords carry 3 qubits". Both conventions are exposed side by side.
inline double rate_floor(int rails, int excitations) {
    return static_cast<double>(qubits(rails, excitations)) / static_cast<double>(rails);
}

// argmax_K C(M,K) = floor(M/2). M = 1 is rejected: its only code (K = 1)
// has a single codeword and carries zero qubits.
inline int optimal_K(int rails) {
    if (rails < 2)
        throw std::invalid_argument("optimal_K: need at least two chains for a nonzero rate");
    return rails / 2;
}

// Strictly increasing chain labels in 1..M.
struct Subset {
    std::vector<int> members;

    void validate(int rails) const {
        if (members.empty()) throw std::invalid_argument("Subset: empty member list");
        int prev = 0;
        for (int m : members) {
            if (m <= prev) throw std::invalid_argument("Subset: members must strictly increase");
            if (m > rails) throw std::invalid_argument("Subset: member exceeds rail count");
            prev = m;
        }
    }

    bool operator==(const Subset& other) const { return members == other.members; }
};

struct RailCode {
    int rails = 0;
    int excitations = 0;
    BigInt codewords;
    int qubits = 0;
    double rate = 0.0;

    static RailCode make(int rails, int excitations) {
        detail::check_code_params(rails, excitations);
        RailCode code;
        code.rails = rails;
        code.excitations = excitations;
        code.codewords = binomial(rails, excitations);
        if (code.codewords < 2)
            throw std::invalid_argument("RailCode: a single codeword carries no information");
        code.qubits = multirail::qubits(rails, excitations);
        code.rate = multirail::rate(rails, excitations);
        return code;
    }
};

// Lexicographic unranking (combinatorial number system), 1-based index.
inline Subset subset_from_index(const BigInt& index, int rails, int excitations) {
    detail::check_code_params(rails, excitations);
    if (index < 1 || index > binomial(rails, excitations))
        throw std::invalid_argument("subset_from_index: index out of range");

    Subset subset;
    subset.members.reserve(static_cast<std::size_t>(excitations));
    BigInt remaining = index - 1;
    int low = 1;
    for (int j = 0; j < excitations; ++j) {
        for (int v = low;; ++v) {
            const BigInt block = binomial(rails - v, excitations - j - 1);
            if (remaining < block) {
                subset.members.push_back(v);
                low = v + 1;
                break;
            }
            remaining -= block;
        }
    }
    return subset;
}

inline BigInt index_from_subset(const Subset& subset, int rails) {
    const int excitations = static_cast<int>(subset.members.size());
    detail::check_code_params(rails, excitations);
    subset.validate(rails);

    BigInt rank = 0;
    int prev = 0;
    for (int j = 0; j < excitations; ++j) {
        for (int v = prev + 1; v < subset.members[static_cast<std::size_t>(j)]; ++v)
            rank += binomial(rails - v, excitations - j - 1);
        prev = subset.members[static_cast<std::size_t>(j)];
    }
    return rank + 1;
}

// Packs each qubits(M,K)-sized block (most significant bit first) into the
// codeword with index block_value + 1. Codewords past 2^qubits are unused;
// the tail of the enumeration is discarded.
inline std::vector<Subset> encode_bits(std::string_view bits, int rails, int excitations) {
    if (bits.empty()) return {};
    const int block = qubits(rails, excitations);
    if (block == 0)
        throw std::invalid_argument("encode_bits: code carries zero qubits per codeword");
    if (bits.size() % static_cast<std::size_t>(block) != 0)
        throw std::invalid_argument("encode_bits: bit count must be a multiple of " +
                                    std::to_string(block));
    std::vector<Subset> out;
    out.reserve(bits.size() / static_cast<std::size_t>(block));
    for (std::size_t pos = 0; pos < bits.size(); pos += static_cast<std::size_t>(block)) {
        BigInt value = 0;
        for (int b = 0; b < block; ++b) {
            const char c = bits[pos + static_cast<std::size_t>(b)];
            if (c != '0' && c != '1')
                throw std::invalid_argument("encode_bits: bit string may contain only 0 and 1");
            value <<= 1;
            if (c == '1') value |= 1;
        }
        out.push_back(subset_from_index(value + 1, rails, excitations));
    }
    return out;
}

inline std::string decode_bits(const std::vector<Subset>& subsets, int rails, int excitations) {
    const int block = qubits(rails, excitations);
    std::string bits;
    bits.reserve(subsets.size() * static_cast<std::size_t>(block));
    for (const Subset& s : subsets) {
        if (static_cast<int>(s.members.size()) != excitations)
            throw std::invalid_argument("decode_bits: subset size does not match the code");
        BigInt value = index_from_subset(s, rails) - 1;
        if (value >> block != 0)
            throw std::invalid_argument("decode_bits: codeword lies outside the packed range");
        for (int b = block - 1; b >= 0; --b)
            bits.push_back(boost::multiprecision::bit_test(value, static_cast<unsigned>(b)) ? '1'
                                                                                            : '0');
    }
    return bits;
}

}  // namespace multirail
