#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wqcascade/dataio.hpp"

namespace wqcascade {

enum class SplitKind { Uniform, Temporal, Spatial };

/// How a dataset is partitioned into train and test sets. Text form:
/// `uniform:k=5,offset=4`, `temporal:year=2019`, `spatial:station=KW`.
struct SplitSpec {
    SplitKind kind = SplitKind::Uniform;
    std::size_t k = 5;
    std::size_t offset = 0;
    int year = 0;
    std::string station;

    static SplitSpec uniform(std::size_t k, std::size_t offset);
    static SplitSpec temporal(int year);
    static SplitSpec spatial(std::string station);
    /// The two stride-5 uniform splits: Set1 takes offset 4, Set2 offset 2.
    static SplitSpec set1() { return uniform(5, 4); }
    static SplitSpec set2() { return uniform(5, 2); }

    static SplitSpec parse(std::string_view text);
    std::string to_string() const;

    friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct Split {
    Dataset train;
    Dataset test;
};

/// Records ordered by ascending ecoli, ties by ascending id.
std::vector<Measurement> sorted_by_ecoli(const Dataset& d);

/// Every k-th record of the ecoli-sorted sequence (sorted index i with
/// i mod k == offset) goes to test. Both halves keep sorted order.
Split uniform_split(const Dataset& d, std::size_t k, std::size_t offset);

/// Test holds every record sampled in `year`.
Split temporal_split(const Dataset& d, int year);

/// Test holds every record of `station`.
Split spatial_split(const Dataset& d, std::string_view station);

Split apply_split(const Dataset& d, const SplitSpec& spec);

/// Shrinks `d` to about `target_size` records while keeping the shape of the
/// ecoli distribution: on the ecoli-sorted sequence every n-th record is
/// removed, n = round(|d| / (|d| - target_size)). When that stride cannot
/// land within one record of the target (more than half of the records must
/// go) removals are spread evenly instead, giving exactly `target_size`.
Dataset thin(const Dataset& d, std::size_t target_size);

enum class GroupName { Low, High, All };

struct StationGroup {
    GroupName name = GroupName::All;
    /// Empty for All, which admits every station.
    std::set<std::string> stations;

    static StationGroup defaults(GroupName name);
    static GroupName parse_name(std::string_view text);
    bool contains(std::string_view station) const;
};

std::string_view to_string(GroupName name);

/// Records whose station belongs to `group`, in input order.
Dataset select_group(const Dataset& d, const StationGroup& group);

}  // namespace wqcascade
