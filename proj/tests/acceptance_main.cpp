#include <cstdio>
#include <cstdlib>
#include <cstring>

#include <taufn/verify.hpp>

// Standalone acceptance runner: one line per criterion, nonzero exit on any
// failure.  Mirrors `taufn_cli --verify`.
int main(int argc, char** argv) {
    std::uint64_t seed = 12345;
    int jobs = 1;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
            seed = std::strtoull(argv[++i], nullptr, 10);
        } else if (std::strcmp(argv[i], "--jobs") == 0 && i + 1 < argc) {
            jobs = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--seed N] [--jobs N]\n", argv[0]);
            return 64;
        }
    }
    auto results = taufn::run_acceptance_suite(seed, jobs);
    int failed = 0;
    for (const auto& r : results) {
        if (!r.pass) ++failed;
        std::printf("[%2d] %s %-26s %s (%.0f ms)\n", r.id, r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.detail.c_str(), r.ms);
    }
    std::printf("%zu/%zu criteria passed\n", results.size() - static_cast<size_t>(failed),
                results.size());
    return failed == 0 ? 0 : 1;
}
