#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "annmix/data.hpp"
#include "annmix/rng.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("annmix_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline std::vector<double> random_vector(annmix::Rng& rng, std::size_t n, double sd = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = sd * rng.normal();
    return v;
}

// Items i0..i{n-1} with random features, predicate p{i % np} and structure s{i % ns}.
inline std::vector<annmix::Item> make_items(std::size_t n, std::size_t dim, annmix::Rng& rng, std::size_t np = 5,
                                            std::size_t ns = 5) {
    std::vector<annmix::Item> items(n);
    for (std::size_t i = 0; i < n; ++i) {
        items[i].id = "i" + std::to_string(i);
        items[i].features = random_vector(rng, dim);
        items[i].predicate = "p" + std::to_string(i % np);
        items[i].structure = "s" + std::to_string(i % ns);
    }
    return items;
}

}  // namespace testing
