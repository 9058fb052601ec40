#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace projcheck {

/// Default cap on the number of configurations any exact computation may visit.
inline constexpr std::uint64_t kDefaultGuard = std::uint64_t{1} << 26;

/// Graph families keep one 64-bit adjacency row per node.
inline constexpr std::size_t kMaxGraphNodes = 64;

struct EnumerationOptions {
    std::uint64_t guard = kDefaultGuard;
    unsigned threads = 1;
};

enum class FamilyKind {
    binary_sequence,
    spin_sequence,
    undirected_graph,
    directed_graph,
    explicit_product,
};

std::string to_string(FamilyKind kind);
std::optional<FamilyKind> family_kind_from_string(const std::string& name);

/// The prefix index set {1, ..., n}. Nesting is by prefix.
class IndexSet {
public:
    explicit IndexSet(std::size_t size);

    std::size_t size() const noexcept { return size_; }
    bool is_subset_of(IndexSet other) const noexcept { return size_ <= other.size_; }

    auto operator<=>(const IndexSet&) const = default;

private:
    std::size_t size_;
};

/// An ordered pair of nodes. Undirected dyads have tail < head.
struct Dyad {
    std::uint32_t tail;
    std::uint32_t head;
    bool operator==(const Dyad&) const = default;
};

/// Undirected dyad (i, j), i < j, sits at j(j-1)/2 + i, so the dyads among the
/// first n nodes are a prefix of the site order.
std::size_t undirected_dyad_site(std::uint32_t i, std::uint32_t j);
/// Directed arcs touching node j > i occupy [j(j-1), j(j+1)) as (i->j, j->i) pairs.
std::size_t directed_arc_site(std::uint32_t from, std::uint32_t to);

/// Describes the per-site alphabets of a family of configuration spaces X_A,
/// one per prefix index set, with X_B = X_A x X_{B\A}.
class SiteSpaceFamily {
public:
    static SiteSpaceFamily binary_sequence();
    static SiteSpaceFamily spin_sequence();
    static SiteSpaceFamily undirected_graph();
    static SiteSpaceFamily directed_graph();
    static SiteSpaceFamily explicit_product(std::vector<std::vector<std::string>> alphabets);

    FamilyKind kind() const noexcept { return kind_; }
    bool is_graph() const noexcept {
        return kind_ == FamilyKind::undirected_graph || kind_ == FamilyKind::directed_graph;
    }
    /// True when every site has the two-letter alphabet {0, 1}.
    bool is_binary() const noexcept { return kind_ != FamilyKind::explicit_product; }

    /// Largest supported index-set size, if bounded.
    std::optional<std::size_t> max_index_size() const;

    std::size_t site_count(IndexSet set) const;
    std::uint32_t alphabet_size(std::size_t site) const;
    const std::string& symbol_name(std::size_t site, std::uint32_t symbol) const;
    std::optional<std::uint32_t> symbol_index(std::size_t site, const std::string& name) const;

    /// Bits reserved per site in a packed configuration (a power of two).
    unsigned bits_per_site() const noexcept { return bits_per_site_; }

    /// |X_A|, or nullopt when it does not fit in 64 bits.
    std::optional<std::uint64_t> configuration_count(IndexSet set) const;
    /// |X_{B\A}|, or nullopt when it does not fit in 64 bits.
    std::optional<std::uint64_t> extension_count(IndexSet sub, IndexSet super) const;
    double log_configuration_count(IndexSet set) const;

    /// Endpoints of the dyad a site encodes (graph kinds only).
    Dyad site_dyad(std::size_t site) const;

    const std::vector<std::vector<std::string>>& alphabets() const noexcept { return alphabets_; }

    bool operator==(const SiteSpaceFamily& other) const {
        return kind_ == other.kind_ && alphabets_ == other.alphabets_;
    }

private:
    SiteSpaceFamily(FamilyKind kind, std::vector<std::vector<std::string>> alphabets);

    FamilyKind kind_;
    std::vector<std::vector<std::string>> alphabets_;  // explicit_product only
    unsigned bits_per_site_ = 1;
};

/// One symbol per site, bit-packed. A configuration either covers a full
/// prefix index set (index_size() > 0) or is a fragment holding only the new
/// sites of some extension (index_size() == 0).
class Configuration {
public:
    Configuration() = default;
    Configuration(std::size_t sites, unsigned bits_per_site, std::size_t index_size);

    static Configuration zeros(const SiteSpaceFamily& family, IndexSet set);

    std::size_t site_count() const noexcept { return sites_; }
    std::size_t index_size() const noexcept { return index_size_; }
    unsigned bits_per_site() const noexcept { return bits_; }
    bool is_fragment() const noexcept { return index_size_ == 0; }

    std::uint32_t get(std::size_t site) const;
    void set(std::size_t site, std::uint32_t symbol);

    std::span<const std::uint64_t> words() const noexcept { return words_; }
    std::size_t hash() const noexcept;

    bool operator==(const Configuration& other) const = default;
    auto operator<=>(const Configuration& other) const = default;

private:
    std::size_t sites_ = 0;
    unsigned bits_ = 1;
    std::size_t index_size_ = 0;
    std::vector<std::uint64_t> words_;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& x) const noexcept { return x.hash(); }
};

/// Checks the enumeration guard and returns |X_A|; throws SpaceTooLarge.
std::uint64_t checked_configuration_count(const SiteSpaceFamily& family, IndexSet set,
                                          std::uint64_t guard);
std::uint64_t checked_extension_count(const SiteSpaceFamily& family, IndexSet sub,
                                      IndexSet super, std::uint64_t guard);

/// Restriction of x_B to the sites of A. Throws NotNested when A is not a
/// subset of x_B's index set.
Configuration project_configuration(const SiteSpaceFamily& family, const Configuration& x_B,
                                    IndexSet sub);

/// The new-site fragment y of x_B = (x_A, y).
Configuration extension_part(const SiteSpaceFamily& family, const Configuration& x_B,
                             IndexSet sub);

/// Joins x_A with a fragment y on the new sites of super.
Configuration extend_configuration(const SiteSpaceFamily& family, const Configuration& x_A,
                                   IndexSet super, const Configuration& y);

/// Human-readable form: symbol names joined by ','.
std::string format_configuration(const SiteSpaceFamily& family, const Configuration& x,
                                 std::size_t first_site = 0);

/// Canonical position of a configuration: mixed radix with site 0 least significant.
std::uint64_t configuration_rank(const SiteSpaceFamily& family, const Configuration& x,
                                 std::size_t first_site = 0);

/// Half-open rank interval for chunk k of K over total items.
struct RankRange {
    std::uint64_t begin;
    std::uint64_t end;
};
RankRange chunk_range(std::uint64_t total, unsigned chunk, unsigned chunks);

/// Every configuration of a site window in canonical order (site 0 varies
/// fastest). Iterating yields a reference to an internal buffer that is
/// updated in place.
class ConfigurationStream {
public:
    /// All of X_A.
    ConfigurationStream(const SiteSpaceFamily& family, IndexSet set, std::uint64_t guard);
    /// All fragments y over the new sites X_{B\A}.
    ConfigurationStream(const SiteSpaceFamily& family, IndexSet sub, IndexSet super,
                        std::uint64_t guard);

    std::uint64_t size() const noexcept { return total_; }

    /// Restrict to chunk k of K (contiguous canonical-order interval).
    ConfigurationStream chunk(unsigned k, unsigned count) const;

    Configuration at(std::uint64_t rank) const;

    class iterator {
    public:
        using value_type = Configuration;
        using difference_type = std::ptrdiff_t;
        using reference = const Configuration&;
        using iterator_category = std::input_iterator_tag;

        iterator() = default;
        reference operator*() const { return current_; }
        const Configuration* operator->() const { return &current_; }
        iterator& operator++();
        void operator++(int) { ++*this; }
        std::uint64_t rank() const noexcept { return rank_; }
        bool operator==(const iterator& other) const { return rank_ == other.rank_; }

    private:
        friend class ConfigurationStream;
        const std::vector<std::uint32_t>* radices_ = nullptr;
        Configuration current_;
        std::uint64_t rank_ = 0;
    };

    iterator begin() const;
    iterator end() const;

private:
    std::vector<std::uint32_t> radices_;
    unsigned bits_ = 1;
    std::size_t index_size_ = 0;
    std::uint64_t total_ = 0;
    RankRange range_{0, 0};
};

} // namespace projcheck
