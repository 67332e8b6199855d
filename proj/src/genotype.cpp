#include "cmabnas/genotype.hpp"

#include <charconv>
#include <regex>
#include <sstream>

namespace cmabnas {

namespace {

std::string input_token(const InputRef& in)
{
    switch (in.kind()) {
    case InputRef::Kind::prev_cell:
        return "c_k-1";
    case InputRef::Kind::prev_prev_cell:
        return "c_k-2";
    case InputRef::Kind::node:
        break;
    }
    return "node" + std::to_string(in.node_index());
}

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::size_t parse_count(std::string_view digits)
{
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
        throw std::invalid_argument("bad number");
    }
    return value;
}

class Parser
{
public:
    Parser(const SearchSpaceConfig& config, std::string_view text)
      : config_(config)
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos) {
                end = text.size();
            }
            lines_.emplace_back(text.substr(start, end - start));
            start = end + 1;
        }
    }

    ArchitecturePair run()
    {
        ArchitecturePair pair;
        pair.normal = section("normal");
        pair.reduction = section("reduction");
        if (const auto* extra = next_line()) {
            fail("unexpected content after reduction cell: '" + *extra + "'");
        }
        return pair;
    }

private:
    const std::string* next_line()
    {
        while (cursor_ < lines_.size()) {
            current_ = trim(lines_[cursor_++]);
            line_no_ = cursor_;
            if (!current_.empty() && current_.front() != '#') {
                return &current_;
            }
        }
        line_no_ = lines_.size();
        return nullptr;
    }

    [[noreturn]] void fail(const std::string& reason) const { throw GenotypeParseError(line_no_, reason); }

    CellGenotype section(const std::string& name)
    {
        const auto* header = next_line();
        if (header == nullptr) {
            fail("missing '" + name + ":' section");
        }
        if (*header != name + ":") {
            fail("expected '" + name + ":', found '" + *header + "'");
        }
        CellGenotype cell;
        for (std::size_t i = 1; i <= config_.nodes; ++i) {
            const auto* line = next_line();
            if (line == nullptr) {
                fail(name + " cell ends after " + std::to_string(i - 1) + " of " + std::to_string(config_.nodes) +
                     " nodes");
            }
            cell.nodes.push_back(node_line(*line, i));
        }
        return cell;
    }

    Arm node_line(const std::string& line, std::size_t expected)
    {
        static const std::regex pattern(
            R"(node([0-9]+)\s*:\s*\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)\s*\+\s*\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\))");
        std::smatch m;
        if (!std::regex_match(line, m, pattern)) {
            fail("malformed node line '" + line + "'");
        }
        std::size_t index = 0;
        try {
            index = parse_count(m[1].str());
        } catch (const std::invalid_argument&) {
            fail("bad node number in '" + line + "'");
        }
        if (index != expected) {
            fail("expected node" + std::to_string(expected) + ", found node" + m[1].str());
        }
        const Choice a{input(m[2].str(), expected), op(m[3].str())};
        const Choice b{input(m[4].str(), expected), op(m[5].str())};
        return canonicalize(config_, expected, a, b);
    }

    InputRef input(const std::string& token, std::size_t position)
    {
        if (token == "c_k-1") {
            return InputRef::prev_cell();
        }
        if (token == "c_k-2") {
            return InputRef::prev_prev_cell();
        }
        if (token.rfind("node", 0) == 0) {
            std::size_t j = 0;
            try {
                j = parse_count(std::string_view(token).substr(4));
            } catch (const std::invalid_argument&) {
                fail("unknown input '" + token + "'");
            }
            if (j == 0) {
                fail("unknown input '" + token + "'");
            }
            if (j >= position) {
                fail("forward reference to " + token + " in node" + std::to_string(position));
            }
            return InputRef::node(j);
        }
        fail("unknown input '" + token + "'");
    }

    std::size_t op(const std::string& token)
    {
        const auto& names = config_.operations.names();
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == token) {
                return i;
            }
        }
        fail("unknown operation '" + token + "'");
    }

    const SearchSpaceConfig& config_;
    std::vector<std::string> lines_;
    std::size_t cursor_ = 0;
    std::size_t line_no_ = 0;
    std::string current_;
};

} // namespace

GenotypeParseError::GenotypeParseError(std::size_t line, const std::string& reason)
  : std::runtime_error("line " + std::to_string(line) + ": " + reason)
  , line_(line)
  , reason_(reason)
{}

std::string serialize_genotype(const SearchSpaceConfig& config, const ArchitecturePair& pair)
{
    validate_pair(config, pair);
    std::ostringstream out;
    auto cell = [&](const char* name, const CellGenotype& g) {
        out << name << ":\n";
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const Arm& arm = g.nodes[i];
            out << "node" << (i + 1) << ": (" << input_token(arm.first().input) << ','
                << config.operations.name(arm.first().op) << ") + (" << input_token(arm.second().input) << ','
                << config.operations.name(arm.second().op) << ")\n";
        }
    };
    cell("normal", pair.normal);
    cell("reduction", pair.reduction);
    return out.str();
}

ArchitecturePair parse_genotype(const SearchSpaceConfig& config, std::string_view text)
{
    config.validate();
    return Parser(config, text).run();
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t genotype_hash(const SearchSpaceConfig& config, const ArchitecturePair& pair)
{
    return fnv1a64(serialize_genotype(config, pair));
}

std::string format_hash(std::uint64_t hash)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[hash & 0xfu];
        hash >>= 4;
    }
    return out;
}

std::uint64_t parse_hash(std::string_view text)
{
    if (text.empty() || text.size() > 16) {
        throw std::invalid_argument("genotype hash must be 1-16 hex digits");
    }
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, 16);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("invalid genotype hash '" + std::string(text) + "'");
    }
    return value;
}

} // namespace cmabnas
