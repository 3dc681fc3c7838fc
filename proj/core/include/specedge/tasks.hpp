#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "specedge/rng.hpp"

namespace specedge {

enum class TaskKind { dyck, scan, modadd };

const char* task_name(TaskKind t);
TaskKind task_from_name(const std::string& name);

// ---------------------------------------------------------------------------
// Dyck-1 depth prediction
// ---------------------------------------------------------------------------

namespace dyck {
constexpr int kOpen = 0;
constexpr int kClose = 1;
constexpr int kPad = 2;
constexpr int kVocab = 3;
constexpr int kMaxDepth = 12; // structural bound for T = 24
} // namespace dyck

struct DyckExample {
    std::vector<int> tokens; // kOpen / kClose, length T
    std::vector<int> depths; // running depth after each token
};

/// depths[t] = sum_{i<=t} s_i with s = +1 for '(' and -1 for ')'.
std::vector<int> dyck_depths(const std::vector<int>& tokens);
bool dyck_valid(const std::vector<int>& tokens);

/// Number of balanced sequences of length T (Catalan(T/2)).
std::uint64_t dyck_word_count(int T);

/// One balanced sequence of even length T, uniform over all such sequences
/// (ballot/cycle-lemma construction, O(T), no rejection).
std::vector<int> sample_dyck_word(int T, Rng& rng);

// ---------------------------------------------------------------------------
// mini-SCAN
// ---------------------------------------------------------------------------

struct ScanExample {
    std::vector<int> command; // command-vocabulary ids
    std::vector<int> actions; // action-vocabulary ids
};

/// Fixed vocabularies; ids are stable and serialized with datasets.
struct ScanVocab {
    std::vector<std::string> command_tokens;
    std::vector<std::string> action_tokens;
    int cmd_pad, act_pad, act_bos, act_eos;

    int cmd_id(const std::string& tok) const;
    int act_id(const std::string& tok) const;
    static const ScanVocab& instance();
};

/// Grammar oracle: expands a command (verb [direction] [repetition], with
/// optional "X and Y") into its action sequence. Pure function.
std::vector<std::string> scan_oracle(const std::vector<std::string>& command);

// ---------------------------------------------------------------------------
// modular addition (optional third task)
// ---------------------------------------------------------------------------

struct ModAddExample {
    int a, b, target;
};

// ---------------------------------------------------------------------------
// datasets
// ---------------------------------------------------------------------------

template <typename Example>
struct Dataset {
    TaskKind task = TaskKind::dyck;
    std::uint64_t seed = 0;
    std::vector<Example> train;
    std::vector<Example> test;
};

using DyckDataset = Dataset<DyckExample>;
using ScanDataset = Dataset<ScanExample>;
using ModAddDataset = Dataset<ModAddExample>;

/// n_train + n_test distinct balanced sequences of length T with depth labels.
/// Throws if more distinct sequences are requested than exist.
DyckDataset gen_dyck(int n_train, int n_test, int T, std::uint64_t seed);
inline DyckDataset gen_dyck(std::uint64_t seed) { return gen_dyck(50, 5000, 24, seed); }

/// Exhaustive verb x direction x repetition fragment plus "X and Y" pairs,
/// split 2048/500 by seeded shuffle.
ScanDataset gen_scan_lite(std::uint64_t seed, int n_train = 2048, int n_test = 500);

/// All p^2 pairs split by train_frac (train size = floor(train_frac * p^2)).
ModAddDataset gen_modadd(int p, double train_frac, std::uint64_t seed);

// Line-delimited text serialization, one example per line.
//   dyck:   "(())  1 2 1 0"            (token string, then depths)
//   scan:   "jump left twice\tLTURN JUMP LTURN JUMP"
//   modadd: "2 3 0"                    (a b target)
void write_dyck(std::ostream& os, const std::vector<DyckExample>& xs);
std::vector<DyckExample> read_dyck(std::istream& is);
void write_scan(std::ostream& os, const std::vector<ScanExample>& xs);
std::vector<ScanExample> read_scan(std::istream& is);
void write_modadd(std::ostream& os, const std::vector<ModAddExample>& xs);
std::vector<ModAddExample> read_modadd(std::istream& is);

} // namespace specedge
