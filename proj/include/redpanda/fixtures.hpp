#pragma once

#include <utility>
#include <vector>

#include "redpanda/synthdata.hpp"

// Pseudo-anomaly selection tables for the three reference multi-attribute
// datasets, shipped as importable fixtures. The image assets themselves are
// out of scope; these tables drive role-assignment tests and external-data
// configurations.

namespace redpanda::fixtures {

// Cars3D: nuisance = camera azimuth (24 values), relevant = car model (183).
inline const std::vector<std::pair<int, int>>& cars3d_pseudo_pairs() {
    static const std::vector<std::pair<int, int>> pairs = {
        {0, 173}, {1, 16},  {2, 75},  {3, 23},  {4, 44},  {5, 78},  {6, 108}, {7, 7},
        {8, 167}, {9, 182}, {10, 99}, {11, 78}, {12, 48}, {13, 66}, {14, 32}, {15, 153},
        {16, 128}, {17, 120}, {18, 38}, {19, 172}, {20, 106}, {21, 4}, {22, 175}, {23, 111},
    };
    return pairs;
}

// SmallNorb: nuisance = camera azimuth (18 values), relevant = object type.
inline const std::vector<std::pair<int, int>>& smallnorb_pseudo_pairs() {
    static const std::vector<std::pair<int, int>> pairs = {
        {0, 44}, {1, 17}, {2, 9},  {3, 25}, {4, 48}, {5, 20},  {6, 12},  {7, 44},  {8, 8},
        {9, 38}, {10, 35}, {11, 12}, {12, 24}, {13, 35}, {14, 29}, {15, 23}, {16, 41}, {17, 43},
    };
    return pairs;
}

// Edges2Shoes: nuisance = image type (photo=0, sketch=1), relevant = shoe
// type (boots=0, sandals=1, shoes=2, slippers=3). Slippers are the true
// anomaly; photos of sandals and sketches of boots are the pseudo-anomalies.
inline const std::vector<std::pair<int, int>>& edges2shoes_pseudo_pairs() {
    static const std::vector<std::pair<int, int>> pairs = {{0, 1}, {1, 0}};
    return pairs;
}

inline synthdata::BenchmarkSpec cars3d_spec(std::size_t per_cell = 1, std::size_t image_size = 16) {
    synthdata::BenchmarkSpec spec;
    spec.attributes.nuisance_domains = 24;
    spec.attributes.relevant_classes = 183;
    spec.attributes.sizes = 1;
    spec.attributes.jitters = 1;
    spec.image_size = image_size;
    spec.per_cell = per_cell;
    // The original five anomalous car models were sampled randomly and never
    // published; any fixed choice disjoint from the pseudo models works.
    spec.true_anomaly_classes = {2, 55, 90, 140, 160};
    spec.pseudo_pairs = cars3d_pseudo_pairs();
    spec.seed = 1;
    return spec;
}

inline synthdata::BenchmarkSpec smallnorb_spec(std::size_t per_cell = 1, std::size_t image_size = 16) {
    synthdata::BenchmarkSpec spec;
    spec.attributes.nuisance_domains = 18;
    spec.attributes.relevant_classes = 50;
    spec.attributes.sizes = 1;
    spec.attributes.jitters = 1;
    spec.image_size = image_size;
    spec.per_cell = per_cell;
    spec.true_anomaly_classes = {0, 10, 21, 30, 45};
    spec.pseudo_pairs = smallnorb_pseudo_pairs();
    spec.seed = 1;
    return spec;
}

inline synthdata::BenchmarkSpec edges2shoes_spec(std::size_t per_cell = 8, std::size_t image_size = 32) {
    synthdata::BenchmarkSpec spec;
    spec.attributes.nuisance_domains = 2;
    spec.attributes.relevant_classes = 4;
    spec.attributes.sizes = 2;
    spec.attributes.jitters = 2;
    spec.image_size = image_size;
    spec.per_cell = per_cell;
    spec.true_anomaly_classes = {3};
    spec.pseudo_pairs = edges2shoes_pseudo_pairs();
    spec.seed = 1;
    return spec;
}

}  // namespace redpanda::fixtures
