#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "glean/align.hpp"

namespace glean::composite {

struct ImageStack {
    std::vector<align::AlignedImage> images;
    std::string prompt;
};

struct CompositeImage {
    RgbImage pixels;
    int n_sources = 0;
    std::string prompt;
};

// Median of a sample of channel values: the middle order statistic for odd
// counts, the mean of the two middle ones (rounded half-to-even) for even.
std::uint8_t median_of(std::span<std::uint8_t> values);

// Per-pixel, per-channel median. Rows are split across `workers` threads
// (0 = hardware concurrency); the result does not depend on the split.
CompositeImage median_composite(const ImageStack& stack, unsigned workers = 0);

// Composite of stack plus outliers, refusing when the outliers could make up
// half or more of the combined sample.
CompositeImage robustness_probe(const ImageStack& stack, const std::vector<align::AlignedImage>& outliers);

// {model}_{prompt-slug}_composite_N{count}.png
std::string composite_name(const std::string& model, const std::string& prompt, int count);

// Newline-delimited file names to drop before stacking.
std::set<std::string> load_exclusion_list(const std::filesystem::path& path);

}  // namespace glean::composite
