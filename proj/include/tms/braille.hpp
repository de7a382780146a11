#pragma once

// 8-dot Braille symbol set: 125 symbols in four groups. Dots D1..D6 follow
// the standard six-dot cell; (D7, D8) carry the group code.
//
// Dot to sensor-grid geometry (4 rows x 2 columns):
//   D1 D4
//   D2 D5
//   D3 D6
//   D7 D8

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tms/config.hpp"
#include "tms/errors.hpp"

namespace tms {

enum class Group { Group1 = 1, Group2 = 2, Group3 = 3, Group4 = 4 };

inline constexpr std::array<Group, 4> kAllGroups{Group::Group1, Group::Group2, Group::Group3, Group::Group4};

inline int group_number(Group g) { return static_cast<int>(g); }

inline Group group_from_number(int n) {
  if (n < 1 || n > 4) throw LookupError("unknown Braille group " + std::to_string(n));
  return static_cast<Group>(n);
}

/// (D7, D8) select bits of a group.
inline std::pair<bool, bool> group_code(Group g) {
  switch (g) {
    case Group::Group1: return {false, false};
    case Group::Group2: return {false, true};
    case Group::Group3: return {true, false};
    case Group::Group4: return {true, true};
  }
  return {false, false};
}

struct BrailleSymbol {
  std::string label;
  Group group = Group::Group1;
  std::array<bool, 8> dots{};  // D1..D8

  bool operator==(const BrailleSymbol&) const = default;

  std::string bits() const {
    std::string s;
    for (bool d : dots) s += d ? '1' : '0';
    return s;
  }
};

namespace detail {

struct SymbolRow {
  std::string_view label;
  int group;
  std::string_view six_dots;  // dot numbers among 1..6
};

// Canonical order. Group 1: capitals plus the capital sign. Group 2:
// lowercase letters. Group 3: Grade-2 contractions and wordsigns. Group 4:
// digits, number sign, punctuation and symbols.
inline constexpr SymbolRow kSymbolRows[] = {
    {"A", 1, "1"},      {"B", 1, "12"},     {"C", 1, "14"},     {"D", 1, "145"},
    {"E", 1, "15"},     {"F", 1, "124"},    {"G", 1, "1245"},   {"H", 1, "125"},
    {"I", 1, "24"},     {"J", 1, "245"},    {"K", 1, "13"},     {"L", 1, "123"},
    {"M", 1, "134"},    {"N", 1, "1345"},   {"O", 1, "135"},    {"P", 1, "1234"},
    {"Q", 1, "12345"},  {"R", 1, "1235"},   {"S", 1, "234"},    {"T", 1, "2345"},
    {"U", 1, "136"},    {"V", 1, "1236"},   {"W", 1, "2456"},   {"X", 1, "1346"},
    {"Y", 1, "13456"},  {"Z", 1, "1356"},   {"capital", 1, "6"},

    {"a", 2, "1"},      {"b", 2, "12"},     {"c", 2, "14"},     {"d", 2, "145"},
    {"e", 2, "15"},     {"f", 2, "124"},    {"g", 2, "1245"},   {"h", 2, "125"},
    {"i", 2, "24"},     {"j", 2, "245"},    {"k", 2, "13"},     {"l", 2, "123"},
    {"m", 2, "134"},    {"n", 2, "1345"},   {"o", 2, "135"},    {"p", 2, "1234"},
    {"q", 2, "12345"},  {"r", 2, "1235"},   {"s", 2, "234"},    {"t", 2, "2345"},
    {"u", 2, "136"},    {"v", 2, "1236"},   {"w", 2, "2456"},   {"x", 2, "1346"},
    {"y", 2, "13456"},  {"z", 2, "1356"},

    {"and", 3, "12346"},   {"for", 3, "123456"},  {"of", 3, "12356"},    {"the", 3, "2346"},
    {"with", 3, "23456"},  {"ch", 3, "16"},       {"gh", 3, "126"},      {"sh", 3, "146"},
    {"th", 3, "1456"},     {"wh", 3, "156"},      {"ed", 3, "1246"},     {"er", 3, "12456"},
    {"ou", 3, "1256"},     {"ow", 3, "246"},      {"st", 3, "34"},       {"ing", 3, "346"},
    {"ar", 3, "345"},      {"ea", 3, "2"},        {"bb", 3, "23"},       {"cc", 3, "25"},
    {"ff", 3, "235"},      {"gg", 3, "2356"},     {"en", 3, "26"},       {"in", 3, "35"},
    {"but", 3, "12"},      {"can", 3, "14"},      {"do", 3, "145"},      {"every", 3, "15"},
    {"from", 3, "124"},    {"go", 3, "1245"},     {"have", 3, "125"},    {"just", 3, "245"},
    {"knowledge", 3, "13"}, {"like", 3, "123"},   {"more", 3, "134"},    {"not", 3, "1345"},
    {"people", 3, "1234"}, {"quite", 3, "12345"}, {"rather", 3, "1235"}, {"so", 3, "234"},
    {"that", 3, "2345"},   {"us", 3, "136"},      {"very", 3, "1236"},   {"will", 3, "2456"},
    {"it", 3, "1346"},     {"you", 3, "13456"},

    {"1", 4, "1"},      {"2", 4, "12"},     {"3", 4, "14"},      {"4", 4, "145"},
    {"5", 4, "15"},     {"6", 4, "124"},    {"7", 4, "1245"},    {"8", 4, "125"},
    {"9", 4, "24"},     {"0", 4, "245"},    {"number", 4, "3456"},    {"comma", 4, "2"},
    {";", 4, "23"},     {":", 4, "25"},     {".", 4, "256"},     {"!", 4, "235"},
    {"?", 4, "236"},    {"apostrophe", 4, "3"}, {"-", 4, "36"},  {"quote", 4, "356"},
    {"paren", 4, "2356"}, {"*", 4, "35"},   {"/", 4, "34"},      {"@", 4, "4"},
    {"&", 4, "12346"},  {"letter", 4, "56"},
};

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0u : 1u)});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace detail

using SymbolTable = std::vector<BrailleSymbol>;

/// The 125-symbol fusion table in canonical order.
inline const SymbolTable& symbol_table() {
  static const SymbolTable table = [] {
    SymbolTable t;
    for (const auto& r : detail::kSymbolRows) {
      BrailleSymbol s;
      s.label = std::string(r.label);
      s.group = group_from_number(r.group);
      for (char d : r.six_dots) s.dots[static_cast<std::size_t>(d - '1')] = true;
      std::tie(s.dots[6], s.dots[7]) = group_code(s.group);
      t.push_back(std::move(s));
    }
    return t;
  }();
  return table;
}

inline std::size_t group_size(Group g) {
  const auto& t = symbol_table();
  return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [g](const auto& s) { return s.group == g; }));
}

/// Fixture text: one "label group bits" line per symbol.
inline std::string format_symbol_table(const SymbolTable& table) {
  std::string out =
      "# 8-dot Braille symbol table: label group D1..D8\n"
      "# Group code (D7,D8): 1=(0,0) 2=(0,1) 3=(1,0) 4=(1,1)\n"
      "# D1..D6 follow the standard Grade-1/Grade-2 English Braille cells.\n";
  for (const auto& s : table) {
    out += s.label + " " + std::to_string(group_number(s.group)) + " " + s.bits() + "\n";
  }
  return out;
}

inline SymbolTable parse_symbol_table(std::string_view text) {
  SymbolTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    BrailleSymbol s;
    int g = 0;
    std::string bits;
    if (!(ls >> s.label >> g >> bits) || bits.size() != 8 ||
        bits.find_first_not_of("01") != std::string::npos) {
      throw ConfigError("symbol table line " + std::to_string(lineno) + ": expected 'label group 8bits'");
    }
    s.group = group_from_number(g);
    for (std::size_t i = 0; i < 8; ++i) s.dots[i] = bits[i] == '1';
    t.push_back(std::move(s));
  }
  return t;
}

inline SymbolTable load_symbol_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open symbol table: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_symbol_table(ss.str());
}

inline BrailleSymbol encode(std::string_view label, Group group) {
  const auto& t = symbol_table();
  for (const auto& s : t) {
    if (s.group == group && s.label == label) return s;
  }
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& s : t) {
    if (s.group == group) ranked.emplace_back(detail::edit_distance(label, s.label), s.label);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string msg = "unknown label '" + std::string(label) + "' in group " +
                    std::to_string(group_number(group)) + "; nearest:";
  for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i) msg += " " + ranked[i].second;
  throw LookupError(msg);
}

/// Index of a symbol in the canonical fusion order.
inline std::size_t symbol_index(std::string_view label, Group group) {
  const auto& t = symbol_table();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].group == group && t[i].label == label) return i;
  }
  encode(label, group);  // throws with suggestions
  return 0;
}

using ForceGrid = Eigen::Matrix<double, 4, 2>;

/// (row, col) of each dot D1..D8 in the 4x2 sensor grid.
inline constexpr std::array<std::pair<int, int>, 8> kDotPosition{
    {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}, {3, 0}, {3, 1}}};

inline ForceGrid symbol_to_forces(const BrailleSymbol& sym, double f_press) {
  if (!(f_press > 0.0)) throw DomainError("f_press must be > 0");
  ForceGrid g = ForceGrid::Zero();
  for (std::size_t d = 0; d < 8; ++d) {
    if (sym.dots[d]) g(kDotPosition[d].first, kDotPosition[d].second) = f_press;
  }
  return g;
}

/// Dot pattern recovered by thresholding a force grid.
inline std::array<bool, 8> forces_to_dots(const ForceGrid& g, double threshold) {
  std::array<bool, 8> dots{};
  for (std::size_t d = 0; d < 8; ++d) dots[d] = g(kDotPosition[d].first, kDotPosition[d].second) > threshold;
  return dots;
}

/// A selection of groups; all four together form the fusion set.
class GroupSet {
 public:
  GroupSet() = default;
  GroupSet(std::initializer_list<Group> gs) : groups_(gs) {}

  static GroupSet fusion() { return {Group::Group1, Group::Group2, Group::Group3, Group::Group4}; }

  /// "1", "2,3", "fusion" or "all".
  static GroupSet parse(std::string_view text) {
    if (text == "fusion" || text == "all") return fusion();
    GroupSet out;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ',')) {
      if (item.rfind("group", 0) == 0 || item.rfind("Group", 0) == 0) item = item.substr(5);
      if (item.empty()) continue;
      try {
        out.groups_.insert(group_from_number(std::stoi(item)));
      } catch (const std::invalid_argument&) {
        throw ConfigError("invalid group selection: " + std::string(text));
      }
    }
    if (out.empty()) throw ConfigError("empty group selection");
    return out;
  }

  bool empty() const { return groups_.empty(); }
  bool contains(Group g) const { return groups_.count(g) != 0; }
  bool is_fusion() const { return groups_.size() == 4; }
  const std::set<Group>& groups() const { return groups_; }

  std::string name() const {
    if (is_fusion()) return "fusion";
    std::string s;
    for (Group g : groups_) s += (s.empty() ? "group" : "+group") + std::to_string(group_number(g));
    return s;
  }

  /// Canonical indices of the member symbols; this is the output-port order.
  std::vector<std::size_t> symbol_indices() const {
    std::vector<std::size_t> idx;
    const auto& t = symbol_table();
    for (std::size_t i = 0; i < t.size(); ++i)
      if (contains(t[i].group)) idx.push_back(i);
    return idx;
  }

  std::size_t size() const { return symbol_indices().size(); }

 private:
  std::set<Group> groups_;
};

struct DatasetItem {
  ForceGrid forces = ForceGrid::Zero();
  std::size_t symbol = 0;  // canonical index
  std::size_t copy = 0;

  const BrailleSymbol& info() const { return symbol_table().at(symbol); }
};

/// `copies` noiseless presses of every symbol in `groups`, in a seeded
/// shuffled order.
inline std::vector<DatasetItem> build_dataset(const GroupSet& groups, std::size_t copies, std::uint64_t seed,
                                              double f_press = 20.0) {
  if (groups.empty()) throw ConfigError("dataset needs at least one group");
  if (copies < 1) throw ConfigError("dataset needs copies >= 1");
  std::vector<DatasetItem> items;
  for (std::size_t c = 0; c < copies; ++c) {
    for (std::size_t s : groups.symbol_indices()) {
      items.push_back({symbol_to_forces(symbol_table()[s], f_press), s, c});
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
  return items;
}

/// Splits off the last copy of every symbol as the held-out test set.
inline std::pair<std::vector<DatasetItem>, std::vector<DatasetItem>> split_holdout(
    const std::vector<DatasetItem>& items) {
  std::map<std::size_t, std::size_t> last_copy;
  for (const auto& it : items) last_copy[it.symbol] = std::max(last_copy[it.symbol], it.copy);
  std::vector<DatasetItem> train, test;
  for (const auto& it : items) {
    const bool held_out = it.copy == last_copy[it.symbol] && it.copy > 0;
    (held_out ? test : train).push_back(it);
  }
  return {train, test};
}

inline std::string dataset_csv_header() { return "index,label,group,copy,D1,D2,D3,D4,D5,D6,D7,D8"; }

/// One row per item; force columns in lbf ordered by dot D1..D8.
inline std::string dataset_to_csv(const std::vector<DatasetItem>& items) {
  std::string out = dataset_csv_header() + "\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    out += std::to_string(i) + "," + it.info().label + "," + std::to_string(group_number(it.info().group)) + "," +
           std::to_string(it.copy);
    for (const auto& [r, c] : kDotPosition) out += "," + format_double(it.forces(r, c));
    out += "\n";
  }
  return out;
}

inline std::vector<DatasetItem> dataset_from_csv(std::string_view text) {
  std::vector<DatasetItem> items;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != dataset_csv_header()) throw ConfigError("dataset CSV: unexpected header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 12) throw ConfigError("dataset CSV line " + std::to_string(lineno) + ": expected 12 fields");
    DatasetItem it;
    it.symbol = symbol_index(f[1], group_from_number(std::stoi(f[2])));
    it.copy = static_cast<std::size_t>(std::stoul(f[3]));
    for (std::size_t d = 0; d < 8; ++d) {
      it.forces(kDotPosition[d].first, kDotPosition[d].second) = std::stod(f[4 + d]);
    }
    items.push_back(it);
  }
  if (!header) throw ConfigError("dataset CSV: missing header");
  return items;
}

}  // namespace tms
