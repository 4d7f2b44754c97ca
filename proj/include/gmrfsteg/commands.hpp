#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "gmrfsteg/embedding.hpp"
#include "gmrfsteg/estimation.hpp"
#include "gmrfsteg/fim.hpp"
#include "gmrfsteg/image_io.hpp"
#include "gmrfsteg/optimizer.hpp"

namespace gmrfsteg::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,  // also infeasible payload and failed verification
    kNotConverged = 2,
    kIo = 3,
};

struct RunConfig {
    std::string input;
    std::string out_dir = ".";
    double payload_rate = 0.0;  // bits per pixel
    std::uint64_t seed = 0;
    int block = estimation::kDefaultBlock;
    int degree = estimation::kDefaultDegree;
    int wiener = filter::kDefaultWienerWindow;
    double beta_t = lattice::kDefaultBetaThreshold;
    bool smooth = false;
    int kernel = embedding::kDefaultSmoothingKernel;
    int threads = 1;
    optimizer::CliqueMode cliques = optimizer::CliqueMode::Dynamic;
    bool dump_theta = false;
    optimizer::SearchTolerance tolerance;
};

/// Maps an exception thrown by a command to its exit code.
int exit_code_for(const std::exception& e);

int cmd_model(const RunConfig& config, std::ostream& out);
int cmd_probs(const RunConfig& config, std::ostream& out);
int cmd_embed(const RunConfig& config, std::ostream& out);

using FimKernel = std::function<fim::Fim2(const fim::CliqueParams&)>;

/// Multiplies one entry ("i11", "i12" or "i22") of fim_clique by `factor`.
FimKernel perturbed_kernel(const std::string& entry, double factor = 1.05);

struct VerifyCheck {
    std::string name;
    std::string domain;
    std::size_t points = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool pass() const;
};

VerifyReport run_verify(const FimKernel& kernel = fim::fim_clique);

int cmd_verify(std::ostream& out, const FimKernel& kernel = fim::fim_clique);

}  // namespace gmrfsteg::cli
