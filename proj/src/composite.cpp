#include "glean/composite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "glean/acquisition.hpp"
#include "glean/error.hpp"

namespace glean::composite {

std::uint8_t median_of(std::span<std::uint8_t> values) {
    if (values.empty()) throw PreconditionError("median of an empty sample");
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const auto lower = *std::max_element(values.begin(), mid);
    return static_cast<std::uint8_t>(std::nearbyint((lower + *mid) / 2.0));
}

CompositeImage median_composite(const ImageStack& stack, unsigned workers) {
    if (stack.images.empty()) throw PreconditionError("median_composite: empty stack");
    const int w = stack.images.front().pixels.width();
    const int h = stack.images.front().pixels.height();
    for (const auto& img : stack.images) {
        if (img.pixels.width() != w || img.pixels.height() != h)
            throw PreconditionError("median_composite: dimension mismatch (" + img.source + ")");
    }

    CompositeImage out{RgbImage(w, h), static_cast<int>(stack.images.size()), stack.prompt};
    const auto n = stack.images.size();
    const std::size_t row_values = static_cast<std::size_t>(w) * 3;

    auto reduce_rows = [&](int y_begin, int y_end) {
        std::vector<std::uint8_t> column(n);
        for (int y = y_begin; y < y_end; ++y) {
            const std::size_t offset = static_cast<std::size_t>(y) * row_values;
            for (std::size_t k = 0; k < row_values; ++k) {
                for (std::size_t i = 0; i < n; ++i) column[i] = stack.images[i].pixels.data()[offset + k];
                out.pixels.data()[offset + k] = median_of(column);
            }
        }
    };

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(h));
    if (workers <= 1) {
        reduce_rows(0, h);
        return out;
    }
    std::vector<std::jthread> pool;
    const int chunk = (h + static_cast<int>(workers) - 1) / static_cast<int>(workers);
    for (int y = 0; y < h; y += chunk) pool.emplace_back(reduce_rows, y, std::min(h, y + chunk));
    pool.clear();
    return out;
}

CompositeImage robustness_probe(const ImageStack& stack, const std::vector<align::AlignedImage>& outliers) {
    const auto clean = stack.images.size();
    if (clean == 0) throw PreconditionError("robustness_probe: empty clean stack");
    if (outliers.size() > (clean - 1) / 2) {
        throw PreconditionError("robustness_probe: " + std::to_string(outliers.size()) +
                                " outliers exceed floor((N-1)/2) for N=" + std::to_string(clean));
    }
    ImageStack combined = stack;
    combined.images.insert(combined.images.end(), outliers.begin(), outliers.end());
    return median_composite(combined);
}

std::string composite_name(const std::string& model, const std::string& prompt, int count) {
    return model + "_" + acquisition::slugify(prompt) + "_composite_N" + std::to_string(count) + ".png";
}

std::set<std::string> load_exclusion_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("exclusion list not found: " + path.string());
    std::set<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        names.insert(line.substr(first));
    }
    return names;
}

}  // namespace glean::composite
