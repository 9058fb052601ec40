#include "projcheck/statespace.hpp"

#include "projcheck/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace projcheck {

namespace {

const std::vector<std::string> kBinarySymbols{"0", "1"};
const std::vector<std::string> kSpinSymbols{"-1", "+1"};

std::size_t words_for(std::size_t sites, unsigned bits) {
    return (sites * bits + 63) / 64;
}

std::uint64_t checked_product(std::span<const std::uint32_t> radices, std::uint64_t guard,
                              const std::string& what) {
    std::uint64_t total = 1;
    bool overflow = false;
    double log2_total = 0.0;
    for (std::uint32_t r : radices) {
        log2_total += std::log2(static_cast<double>(r));
        overflow = overflow || __builtin_mul_overflow(total, std::uint64_t{r}, &total);
    }
    if (overflow || total > guard) {
        const std::string size = overflow ? "about 2^" + std::to_string(static_cast<long>(std::round(log2_total)))
                                          : std::to_string(total);
        fail(ErrorCode::SpaceTooLarge, what + " has " + size + " configurations, above the guard of " +
                                           std::to_string(guard));
    }
    return total;
}

std::vector<std::uint32_t> window_radices(const SiteSpaceFamily& family, std::size_t first,
                                          std::size_t last) {
    std::vector<std::uint32_t> radices;
    radices.reserve(last - first);
    for (std::size_t s = first; s < last; ++s) {
        radices.push_back(family.alphabet_size(s));
    }
    return radices;
}

} // namespace

std::string to_string(FamilyKind kind) {
    switch (kind) {
    case FamilyKind::binary_sequence: return "binary-sequence";
    case FamilyKind::spin_sequence: return "spin-sequence";
    case FamilyKind::undirected_graph: return "undirected-graph";
    case FamilyKind::directed_graph: return "directed-graph";
    case FamilyKind::explicit_product: return "explicit-product";
    }
    return "unknown";
}

std::optional<FamilyKind> family_kind_from_string(const std::string& name) {
    for (auto kind : {FamilyKind::binary_sequence, FamilyKind::spin_sequence,
                      FamilyKind::undirected_graph, FamilyKind::directed_graph,
                      FamilyKind::explicit_product}) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

IndexSet::IndexSet(std::size_t size) : size_(size) {
    if (size == 0) fail(ErrorCode::InvalidArgument, "index sets are non-empty prefixes {1..n}");
}

std::size_t undirected_dyad_site(std::uint32_t i, std::uint32_t j) {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(j) * (j - 1) / 2 + i;
}

std::size_t directed_arc_site(std::uint32_t from, std::uint32_t to) {
    std::uint32_t hi = std::max(from, to);
    std::uint32_t lo = std::min(from, to);
    std::size_t base = static_cast<std::size_t>(hi) * (hi - 1);
    return base + 2 * static_cast<std::size_t>(lo) + (from == hi ? 1 : 0);
}

SiteSpaceFamily::SiteSpaceFamily(FamilyKind kind, std::vector<std::vector<std::string>> alphabets)
    : kind_(kind), alphabets_(std::move(alphabets)) {
    if (kind_ != FamilyKind::explicit_product) return;
    if (alphabets_.empty()) {
        fail(ErrorCode::InvalidArgument, "explicit-product family needs at least one alphabet");
    }
    std::size_t widest = 0;
    for (const auto& alphabet : alphabets_) {
        if (alphabet.empty()) {
            fail(ErrorCode::InvalidArgument, "every per-site alphabet must be non-empty");
        }
        std::vector<std::string> sorted = alphabet;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            fail(ErrorCode::InvalidArgument, "alphabet symbols must be distinct");
        }
        widest = std::max(widest, alphabet.size());
    }
    unsigned bits = std::max(1u, static_cast<unsigned>(std::bit_width(widest - 1)));
    bits_per_site_ = std::bit_ceil(bits);
    if (bits_per_site_ > 32) fail(ErrorCode::InvalidArgument, "alphabet too large");
}

SiteSpaceFamily SiteSpaceFamily::binary_sequence() {
    return SiteSpaceFamily(FamilyKind::binary_sequence, {});
}
SiteSpaceFamily SiteSpaceFamily::spin_sequence() {
    return SiteSpaceFamily(FamilyKind::spin_sequence, {});
}
SiteSpaceFamily SiteSpaceFamily::undirected_graph() {
    return SiteSpaceFamily(FamilyKind::undirected_graph, {});
}
SiteSpaceFamily SiteSpaceFamily::directed_graph() {
    return SiteSpaceFamily(FamilyKind::directed_graph, {});
}
SiteSpaceFamily SiteSpaceFamily::explicit_product(std::vector<std::vector<std::string>> alphabets) {
    return SiteSpaceFamily(FamilyKind::explicit_product, std::move(alphabets));
}

std::optional<std::size_t> SiteSpaceFamily::max_index_size() const {
    switch (kind_) {
    case FamilyKind::explicit_product: return alphabets_.size();
    case FamilyKind::undirected_graph:
    case FamilyKind::directed_graph: return kMaxGraphNodes;
    default: return std::nullopt;
    }
}

std::size_t SiteSpaceFamily::site_count(IndexSet set) const {
    const std::size_t n = set.size();
    if (auto cap = max_index_size(); cap && n > *cap) {
        fail(ErrorCode::IndexOutOfRange, "index set of size " + std::to_string(n) +
                                             " exceeds the family's limit of " +
                                             std::to_string(*cap));
    }
    switch (kind_) {
    case FamilyKind::undirected_graph: return n * (n - 1) / 2;
    case FamilyKind::directed_graph: return n * (n - 1);
    default: return n;
    }
}

std::uint32_t SiteSpaceFamily::alphabet_size(std::size_t site) const {
    if (kind_ != FamilyKind::explicit_product) return 2;
    if (site >= alphabets_.size()) {
        fail(ErrorCode::IndexOutOfRange, "site " + std::to_string(site) + " out of range");
    }
    return static_cast<std::uint32_t>(alphabets_[site].size());
}

const std::string& SiteSpaceFamily::symbol_name(std::size_t site, std::uint32_t symbol) const {
    if (symbol >= alphabet_size(site)) {
        fail(ErrorCode::IndexOutOfRange, "symbol index out of range");
    }
    switch (kind_) {
    case FamilyKind::explicit_product: return alphabets_[site][symbol];
    case FamilyKind::spin_sequence: return kSpinSymbols[symbol];
    default: return kBinarySymbols[symbol];
    }
}

std::optional<std::uint32_t> SiteSpaceFamily::symbol_index(std::size_t site,
                                                           const std::string& name) const {
    const std::uint32_t size = alphabet_size(site);
    for (std::uint32_t s = 0; s < size; ++s) {
        if (symbol_name(site, s) == name) return s;
    }
    if (kind_ == FamilyKind::spin_sequence && name == "1") return 1;
    return std::nullopt;
}

std::optional<std::uint64_t> SiteSpaceFamily::configuration_count(IndexSet set) const {
    const std::size_t sites = site_count(set);
    std::uint64_t total = 1;
    for (std::size_t s = 0; s < sites; ++s) {
        const std::uint32_t r = alphabet_size(s);
        if (total > std::numeric_limits<std::uint64_t>::max() / r) return std::nullopt;
        total *= r;
    }
    return total;
}

std::optional<std::uint64_t> SiteSpaceFamily::extension_count(IndexSet sub, IndexSet super) const {
    if (!sub.is_subset_of(super)) fail(ErrorCode::NotNested, "sub index set is not nested in super");
    const std::size_t first = site_count(sub);
    const std::size_t last = site_count(super);
    std::uint64_t total = 1;
    for (std::size_t s = first; s < last; ++s) {
        const std::uint32_t r = alphabet_size(s);
        if (total > std::numeric_limits<std::uint64_t>::max() / r) return std::nullopt;
        total *= r;
    }
    return total;
}

double SiteSpaceFamily::log_configuration_count(IndexSet set) const {
    const std::size_t sites = site_count(set);
    if (kind_ != FamilyKind::explicit_product) return static_cast<double>(sites) * std::log(2.0);
    double total = 0.0;
    for (std::size_t s = 0; s < sites; ++s) total += std::log(static_cast<double>(alphabet_size(s)));
    return total;
}

Dyad SiteSpaceFamily::site_dyad(std::size_t site) const {
    if (kind_ == FamilyKind::undirected_graph) {
        auto j = static_cast<std::uint32_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(site))) / 2.0);
        while (static_cast<std::size_t>(j) * (j - 1) / 2 > site) --j;
        while (static_cast<std::size_t>(j + 1) * j / 2 <= site) ++j;
        auto i = static_cast<std::uint32_t>(site - static_cast<std::size_t>(j) * (j - 1) / 2);
        return {i, j};
    }
    if (kind_ == FamilyKind::directed_graph) {
        auto j = static_cast<std::uint32_t>((1.0 + std::sqrt(1.0 + 4.0 * static_cast<double>(site))) / 2.0);
        while (static_cast<std::size_t>(j) * (j - 1) > site) --j;
        while (static_cast<std::size_t>(j + 1) * j <= site) ++j;
        std::size_t offset = site - static_cast<std::size_t>(j) * (j - 1);
        auto i = static_cast<std::uint32_t>(offset / 2);
        if (offset % 2 == 0) return {i, j};
        return {j, i};
    }
    fail(ErrorCode::InvalidArgument, "site_dyad requires a graph family");
}

Configuration::Configuration(std::size_t sites, unsigned bits_per_site, std::size_t index_size)
    : sites_(sites), bits_(bits_per_site), index_size_(index_size),
      words_(words_for(sites, bits_per_site), 0) {}

Configuration Configuration::zeros(const SiteSpaceFamily& family, IndexSet set) {
    return Configuration(family.site_count(set), family.bits_per_site(), set.size());
}

std::uint32_t Configuration::get(std::size_t site) const {
    const std::size_t bit = site * bits_;
    const std::uint64_t mask = bits_ == 64 ? ~0ull : ((std::uint64_t{1} << bits_) - 1);
    return static_cast<std::uint32_t>((words_[bit / 64] >> (bit % 64)) & mask);
}

void Configuration::set(std::size_t site, std::uint32_t symbol) {
    const std::size_t bit = site * bits_;
    const std::uint64_t mask = (std::uint64_t{1} << bits_) - 1;
    std::uint64_t& word = words_[bit / 64];
    word = (word & ~(mask << (bit % 64))) | ((static_cast<std::uint64_t>(symbol) & mask) << (bit % 64));
}

std::size_t Configuration::hash() const noexcept {
    std::uint64_t h = 1469598103934665603ull ^ sites_;
    for (std::uint64_t w : words_) {
        h ^= w;
        h *= 1099511628211ull;
        h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
}

std::uint64_t checked_configuration_count(const SiteSpaceFamily& family, IndexSet set,
                                          std::uint64_t guard) {
    const auto radices = window_radices(family, 0, family.site_count(set));
    return checked_product(radices, guard, "X_A for |A| = " + std::to_string(set.size()));
}

std::uint64_t checked_extension_count(const SiteSpaceFamily& family, IndexSet sub,
                                      IndexSet super, std::uint64_t guard) {
    if (!sub.is_subset_of(super)) fail(ErrorCode::NotNested, "sub index set is not nested in super");
    const auto radices = window_radices(family, family.site_count(sub), family.site_count(super));
    return checked_product(radices, guard,
                           "X_{B\\A} for |A| = " + std::to_string(sub.size()) +
                               ", |B| = " + std::to_string(super.size()));
}

Configuration project_configuration(const SiteSpaceFamily& family, const Configuration& x_B,
                                    IndexSet sub) {
    if (x_B.is_fragment() || sub.size() > x_B.index_size()) {
        fail(ErrorCode::NotNested, "cannot project onto an index set of size " +
                                       std::to_string(sub.size()) + " from size " +
                                       std::to_string(x_B.index_size()));
    }
    const std::size_t sites = family.site_count(sub);
    Configuration x_A(sites, x_B.bits_per_site(), sub.size());
    for (std::size_t s = 0; s < sites; ++s) x_A.set(s, x_B.get(s));
    return x_A;
}

Configuration extension_part(const SiteSpaceFamily& family, const Configuration& x_B,
                             IndexSet sub) {
    if (x_B.is_fragment() || sub.size() > x_B.index_size()) {
        fail(ErrorCode::NotNested, "sub index set is not nested in the configuration's index set");
    }
    const std::size_t first = family.site_count(sub);
    Configuration y(x_B.site_count() - first, x_B.bits_per_site(), 0);
    for (std::size_t s = first; s < x_B.site_count(); ++s) y.set(s - first, x_B.get(s));
    return y;
}

Configuration extend_configuration(const SiteSpaceFamily& family, const Configuration& x_A,
                                   IndexSet super, const Configuration& y) {
    if (x_A.is_fragment() || x_A.index_size() > super.size()) {
        fail(ErrorCode::NotNested, "base configuration is not nested in the target index set");
    }
    const std::size_t first = x_A.site_count();
    const std::size_t last = family.site_count(super);
    if (y.site_count() != last - first) {
        fail(ErrorCode::InvalidArgument, "extension has " + std::to_string(y.site_count()) +
                                             " sites, expected " + std::to_string(last - first));
    }
    Configuration x_B(last, family.bits_per_site(), super.size());
    for (std::size_t s = 0; s < first; ++s) x_B.set(s, x_A.get(s));
    for (std::size_t s = first; s < last; ++s) x_B.set(s, y.get(s - first));
    return x_B;
}

std::string format_configuration(const SiteSpaceFamily& family, const Configuration& x,
                                 std::size_t first_site) {
    std::string out;
    for (std::size_t s = 0; s < x.site_count(); ++s) {
        if (s) out += ',';
        out += family.symbol_name(first_site + s, x.get(s));
    }
    return out;
}

std::uint64_t configuration_rank(const SiteSpaceFamily& family, const Configuration& x,
                                 std::size_t first_site) {
    std::uint64_t rank = 0;
    for (std::size_t s = x.site_count(); s-- > 0;) {
        rank = rank * family.alphabet_size(first_site + s) + x.get(s);
    }
    return rank;
}

RankRange chunk_range(std::uint64_t total, unsigned chunk, unsigned chunks) {
    if (chunks == 0 || chunk >= chunks) fail(ErrorCode::InvalidArgument, "invalid chunk index");
    const std::uint64_t base = total / chunks;
    const std::uint64_t extra = total % chunks;
    const std::uint64_t begin = chunk * base + std::min<std::uint64_t>(chunk, extra);
    const std::uint64_t end = begin + base + (chunk < extra ? 1 : 0);
    return {begin, end};
}

ConfigurationStream::ConfigurationStream(const SiteSpaceFamily& family, IndexSet set,
                                         std::uint64_t guard)
    : radices_(window_radices(family, 0, family.site_count(set))),
      bits_(family.bits_per_site()), index_size_(set.size()) {
    total_ = checked_product(radices_, guard, "X_A for |A| = " + std::to_string(set.size()));
    range_ = {0, total_};
}

ConfigurationStream::ConfigurationStream(const SiteSpaceFamily& family, IndexSet sub,
                                         IndexSet super, std::uint64_t guard)
    : bits_(family.bits_per_site()), index_size_(0) {
    if (!sub.is_subset_of(super)) fail(ErrorCode::NotNested, "sub index set is not nested in super");
    radices_ = window_radices(family, family.site_count(sub), family.site_count(super));
    total_ = checked_product(radices_, guard,
                             "X_{B\\A} for |A| = " + std::to_string(sub.size()) +
                                 ", |B| = " + std::to_string(super.size()));
    range_ = {0, total_};
}

ConfigurationStream ConfigurationStream::chunk(unsigned k, unsigned count) const {
    ConfigurationStream copy = *this;
    const RankRange sub = chunk_range(range_.end - range_.begin, k, count);
    copy.range_ = {range_.begin + sub.begin, range_.begin + sub.end};
    return copy;
}

Configuration ConfigurationStream::at(std::uint64_t rank) const {
    Configuration x(radices_.size(), bits_, index_size_);
    for (std::size_t s = 0; s < radices_.size(); ++s) {
        x.set(s, static_cast<std::uint32_t>(rank % radices_[s]));
        rank /= radices_[s];
    }
    return x;
}

ConfigurationStream::iterator ConfigurationStream::begin() const {
    iterator it;
    it.radices_ = &radices_;
    it.rank_ = range_.begin;
    if (range_.begin < range_.end) it.current_ = at(range_.begin);
    return it;
}

ConfigurationStream::iterator ConfigurationStream::end() const {
    iterator it;
    it.radices_ = &radices_;
    it.rank_ = range_.end;
    return it;
}

ConfigurationStream::iterator& ConfigurationStream::iterator::operator++() {
    ++rank_;
    const auto& radices = *radices_;
    for (std::size_t s = 0; s < radices.size(); ++s) {
        const std::uint32_t next = current_.get(s) + 1;
        if (next < radices[s]) {
            current_.set(s, next);
            break;
        }
        current_.set(s, 0);
    }
    return *this;
}

} // namespace projcheck
