#include "specedge/tasks.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace specedge {

const char* task_name(TaskKind t) {
    switch (t) {
        case TaskKind::dyck: return "dyck";
        case TaskKind::scan: return "scan";
        case TaskKind::modadd: return "modadd";
    }
    return "?";
}

TaskKind task_from_name(const std::string& name) {
    if (name == "dyck") return TaskKind::dyck;
    if (name == "scan") return TaskKind::scan;
    if (name == "modadd") return TaskKind::modadd;
    throw std::invalid_argument("unknown task: " + name);
}

// ---------------------------------------------------------------------------
// Dyck
// ---------------------------------------------------------------------------

std::vector<int> dyck_depths(const std::vector<int>& tokens) {
    std::vector<int> depths(tokens.size());
    int d = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        d += tokens[t] == dyck::kOpen ? 1 : -1;
        depths[t] = d;
    }
    return depths;
}

bool dyck_valid(const std::vector<int>& tokens) {
    int d = 0;
    for (const int tok : tokens) {
        if (tok != dyck::kOpen && tok != dyck::kClose) return false;
        d += tok == dyck::kOpen ? 1 : -1;
        if (d < 0) return false;
    }
    return d == 0;
}

std::uint64_t dyck_word_count(int T) {
    if (T < 0 || T % 2 != 0) throw std::invalid_argument("dyck length must be even");
    const int m = T / 2;
    // Catalan(m) via the recurrence C_{k} = C_{k-1} * 2(2k-1)/(k+1)
    std::uint64_t c = 1;
    for (int k = 1; k <= m; ++k) c = c * 2 * (2 * static_cast<std::uint64_t>(k) - 1) / (k + 1);
    return c;
}

std::vector<int> sample_dyck_word(int T, Rng& rng) {
    if (T <= 0 || T % 2 != 0) throw std::invalid_argument("dyck length must be even and positive");
    const int m = T / 2;
    // m up-steps and m+1 down-steps; the unique rotation starting after the
    // first minimum of the prefix sum dominates, and dropping its trailing
    // down-step leaves a uniform Dyck word (cycle lemma).
    std::vector<int> steps(static_cast<std::size_t>(2 * m + 1), -1);
    std::fill(steps.begin(), steps.begin() + m, 1);
    rng.shuffle(steps);

    int sum = 0, min_sum = 0;
    std::size_t min_pos = steps.size(); // position AFTER which the rotation starts
    for (std::size_t i = 0; i < steps.size(); ++i) {
        sum += steps[i];
        if (sum < min_sum) {
            min_sum = sum;
            min_pos = i;
        }
    }
    std::vector<int> word;
    word.reserve(static_cast<std::size_t>(T));
    for (std::size_t k = 1; k < steps.size(); ++k) {
        const int s = steps[(min_pos + k) % steps.size()];
        word.push_back(s > 0 ? dyck::kOpen : dyck::kClose);
    }
    return word;
}

DyckDataset gen_dyck(int n_train, int n_test, int T, std::uint64_t seed) {
    if (T <= 0 || T % 2 != 0) throw std::invalid_argument("gen_dyck: T must be even and positive");
    const std::uint64_t want = static_cast<std::uint64_t>(n_train) + static_cast<std::uint64_t>(n_test);
    if (want > dyck_word_count(T))
        throw std::invalid_argument("gen_dyck: requested " + std::to_string(want) + " distinct words but only " +
                                    std::to_string(dyck_word_count(T)) + " exist for T=" + std::to_string(T));
    Rng rng(seed);
    DyckDataset ds;
    ds.task = TaskKind::dyck;
    ds.seed = seed;
    std::unordered_set<std::string> seen;
    seen.reserve(static_cast<std::size_t>(want) * 2);
    auto key = [](const std::vector<int>& toks) {
        std::string k(toks.size(), '0');
        for (std::size_t i = 0; i < toks.size(); ++i) k[i] = static_cast<char>('0' + toks[i]);
        return k;
    };
    while (seen.size() < want) {
        std::vector<int> toks = sample_dyck_word(T, rng);
        if (!seen.insert(key(toks)).second) continue;
        DyckExample ex;
        ex.depths = dyck_depths(toks);
        ex.tokens = std::move(toks);
        if (static_cast<int>(ds.train.size()) < n_train)
            ds.train.push_back(std::move(ex));
        else
            ds.test.push_back(std::move(ex));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// SCAN
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kVerbs = {"jump", "walk", "run", "look"};
const std::vector<std::string> kVerbActions = {"JUMP", "WALK", "RUN", "LOOK"};

std::string verb_action(const std::string& verb) {
    for (std::size_t i = 0; i < kVerbs.size(); ++i)
        if (kVerbs[i] == verb) return kVerbActions[i];
    throw std::invalid_argument("scan: unknown verb '" + verb + "'");
}

// verb [left|right|opposite left|opposite right] [twice|thrice]
std::vector<std::string> expand_phrase(const std::vector<std::string>& toks, std::size_t lo, std::size_t hi) {
    if (lo >= hi) throw std::invalid_argument("scan: empty phrase");
    std::size_t i = lo;
    const std::string action = verb_action(toks[i++]);
    std::vector<std::string> unit;
    if (i < hi && toks[i] == "opposite") {
        ++i;
        if (i >= hi || (toks[i] != "left" && toks[i] != "right"))
            throw std::invalid_argument("scan: 'opposite' must be followed by a direction");
        const std::string turn = toks[i++] == "left" ? "LTURN" : "RTURN";
        unit = {turn, turn, action};
    } else if (i < hi && (toks[i] == "left" || toks[i] == "right")) {
        unit = {toks[i++] == "left" ? "LTURN" : "RTURN", action};
    } else {
        unit = {action};
    }
    int reps = 1;
    if (i < hi && (toks[i] == "twice" || toks[i] == "thrice")) {
        reps = toks[i] == "twice" ? 2 : 3;
        ++i;
    }
    if (i != hi) throw std::invalid_argument("scan: trailing tokens in phrase");
    std::vector<std::string> out;
    for (int r = 0; r < reps; ++r) out.insert(out.end(), unit.begin(), unit.end());
    return out;
}

} // namespace

std::vector<std::string> scan_oracle(const std::vector<std::string>& command) {
    for (std::size_t i = 0; i < command.size(); ++i) {
        if (command[i] == "and") {
            auto left = expand_phrase(command, 0, i);
            auto right = expand_phrase(command, i + 1, command.size());
            left.insert(left.end(), right.begin(), right.end());
            return left;
        }
    }
    return expand_phrase(command, 0, command.size());
}

const ScanVocab& ScanVocab::instance() {
    static const ScanVocab v = [] {
        ScanVocab sv;
        sv.command_tokens = {"<pad>", "jump", "walk", "run",   "look",  "left",
                             "right", "opposite", "twice", "thrice", "and"};
        sv.action_tokens = {"<pad>", "<bos>", "<eos>", "JUMP", "WALK", "RUN", "LOOK", "LTURN", "RTURN"};
        sv.cmd_pad = 0;
        sv.act_pad = 0;
        sv.act_bos = 1;
        sv.act_eos = 2;
        return sv;
    }();
    return v;
}

int ScanVocab::cmd_id(const std::string& tok) const {
    for (std::size_t i = 0; i < command_tokens.size(); ++i)
        if (command_tokens[i] == tok) return static_cast<int>(i);
    throw std::invalid_argument("scan: token '" + tok + "' not in command vocabulary");
}

int ScanVocab::act_id(const std::string& tok) const {
    for (std::size_t i = 0; i < action_tokens.size(); ++i)
        if (action_tokens[i] == tok) return static_cast<int>(i);
    throw std::invalid_argument("scan: token '" + tok + "' not in action vocabulary");
}

ScanDataset gen_scan_lite(std::uint64_t seed, int n_train, int n_test) {
    const ScanVocab& vocab = ScanVocab::instance();
    const std::vector<std::vector<std::string>> dirs = {
        {}, {"left"}, {"right"}, {"opposite", "left"}, {"opposite", "right"}};
    const std::vector<std::vector<std::string>> reps = {{}, {"twice"}, {"thrice"}};

    std::vector<std::vector<std::string>> phrases;
    for (const auto& v : kVerbs)
        for (const auto& d : dirs)
            for (const auto& r : reps) {
                std::vector<std::string> p = {v};
                p.insert(p.end(), d.begin(), d.end());
                p.insert(p.end(), r.begin(), r.end());
                phrases.push_back(std::move(p));
            }

    std::vector<std::vector<std::string>> commands = phrases;
    const std::size_t need = static_cast<std::size_t>(n_train) + static_cast<std::size_t>(n_test);
    for (const auto& a : phrases) {
        for (const auto& b : phrases) {
            std::vector<std::string> c = a;
            c.push_back("and");
            c.insert(c.end(), b.begin(), b.end());
            commands.push_back(std::move(c));
        }
    }
    if (commands.size() < need)
        throw std::runtime_error("gen_scan_lite: grammar yields " + std::to_string(commands.size()) +
                                 " pairs, fewer than requested " + std::to_string(need));

    Rng rng(seed);
    rng.shuffle(commands);

    ScanDataset ds;
    ds.task = TaskKind::scan;
    ds.seed = seed;
    auto encode = [&](const std::vector<std::string>& cmd) {
        ScanExample ex;
        for (const auto& t : cmd) ex.command.push_back(vocab.cmd_id(t));
        for (const auto& a : scan_oracle(cmd)) ex.actions.push_back(vocab.act_id(a));
        return ex;
    };
    for (int i = 0; i < n_train; ++i) ds.train.push_back(encode(commands[static_cast<std::size_t>(i)]));
    for (int i = 0; i < n_test; ++i)
        ds.test.push_back(encode(commands[static_cast<std::size_t>(n_train + i)]));
    return ds;
}

// ---------------------------------------------------------------------------
// modular addition
// ---------------------------------------------------------------------------

namespace {
bool is_prime(int p) {
    if (p < 2) return false;
    for (int d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}
} // namespace

ModAddDataset gen_modadd(int p, double train_frac, std::uint64_t seed) {
    if (!is_prime(p)) throw std::invalid_argument("gen_modadd: p must be prime");
    if (train_frac < 0.0 || train_frac > 1.0) throw std::invalid_argument("gen_modadd: bad train_frac");
    std::vector<ModAddExample> all;
    all.reserve(static_cast<std::size_t>(p) * p);
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) all.push_back({a, b, (a + b) % p});
    Rng rng(seed);
    rng.shuffle(all);
    const std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(all.size()));
    ModAddDataset ds;
    ds.task = TaskKind::modadd;
    ds.seed = seed;
    ds.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
    ds.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
    return ds;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

void write_dyck(std::ostream& os, const std::vector<DyckExample>& xs) {
    for (const auto& ex : xs) {
        for (const int t : ex.tokens) os << (t == dyck::kOpen ? '(' : ')');
        for (const int d : ex.depths) os << ' ' << d;
        os << '\n';
    }
}

std::vector<DyckExample> read_dyck(std::istream& is) {
    std::vector<DyckExample> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        DyckExample ex;
        for (const char c : word) ex.tokens.push_back(c == '(' ? dyck::kOpen : dyck::kClose);
        int d;
        while (ss >> d) ex.depths.push_back(d);
        if (ex.depths.size() != ex.tokens.size())
            throw std::runtime_error("read_dyck: depth count mismatch on line: " + line);
        out.push_back(std::move(ex));
    }
    return out;
}

void write_scan(std::ostream& os, const std::vector<ScanExample>& xs) {
    const ScanVocab& v = ScanVocab::instance();
    for (const auto& ex : xs) {
        for (std::size_t i = 0; i < ex.command.size(); ++i)
            os << (i ? " " : "") << v.command_tokens[static_cast<std::size_t>(ex.command[i])];
        os << '\t';
        for (std::size_t i = 0; i < ex.actions.size(); ++i)
            os << (i ? " " : "") << v.action_tokens[static_cast<std::size_t>(ex.actions[i])];
        os << '\n';
    }
}

std::vector<ScanExample> read_scan(std::istream& is) {
    const ScanVocab& v = ScanVocab::instance();
    std::vector<ScanExample> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw std::runtime_error("read_scan: missing tab separator");
        ScanExample ex;
        std::istringstream cs(line.substr(0, tab)), as(line.substr(tab + 1));
        std::string tok;
        while (cs >> tok) ex.command.push_back(v.cmd_id(tok));
        while (as >> tok) ex.actions.push_back(v.act_id(tok));
        out.push_back(std::move(ex));
    }
    return out;
}

void write_modadd(std::ostream& os, const std::vector<ModAddExample>& xs) {
    for (const auto& ex : xs) os << ex.a << ' ' << ex.b << ' ' << ex.target << '\n';
}

std::vector<ModAddExample> read_modadd(std::istream& is) {
    std::vector<ModAddExample> out;
    int a, b, t;
    while (is >> a >> b >> t) out.push_back({a, b, t});
    return out;
}

} // namespace specedge
