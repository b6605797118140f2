#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adaptz/probvec.hpp"

namespace adaptz {

enum class LinkFamily { Identity, Logistic };

// Inverse link g together with the noise variance law. The identity link
// carries its noise standard deviation so that the variance function is
// defined everywhere.
struct LinkKind {
    LinkFamily family = LinkFamily::Identity;
    double noise_sd = 1.0;

    static LinkKind identity(double sigma = 1.0);
    static LinkKind logistic();

    bool is_identity() const { return family == LinkFamily::Identity; }
};

struct LinkValue {
    double g;
    double g_prime;
    double var_fn;
};

// g(eta), g'(eta) and the conditional noise variance at mean g(eta).
LinkValue link_eval(const LinkKind& link, double eta);

// Cumulant G with G' = g: eta^2 / 2 (identity) or log(1 + e^eta) (logistic).
double link_cumulant(const LinkKind& link, double eta);

// Covariate of an arm draw: e_k for arm k >= 1, the zero vector for arm 0.
VectorXd covariate_vector(int arm, int d0);

// One adaptively collected round.
struct Sample {
    int arm = 0;
    VectorXd z;
    double y = 0.0;
    SelectionProbs probs;
};

// Non-owning view over a contiguous run of samples with shared dimensions.
struct SampleView {
    std::span<const Sample> rows;
    int d0 = 0;
    int d1 = 0;

    std::size_t size() const { return rows.size(); }
};

class Dataset {
public:
    Dataset(std::vector<Sample> samples, int d0, int d1, int split_at);

    const std::vector<Sample>& samples() const { return samples_; }
    int d0() const { return d0_; }
    int d1() const { return d1_; }
    int split_at() const { return split_at_; }
    int size() const { return static_cast<int>(samples_.size()); }
    int n2() const { return size() - split_at_; }

    // Rounds 1..n1 and n1+1..n respectively.
    SampleView fold1() const;
    SampleView fold2() const;
    SampleView all() const;

    Dataset with_split(int split_at) const;

private:
    std::vector<Sample> samples_;
    int d0_;
    int d1_;
    int split_at_;
};

struct TrueModel {
    VectorXd theta_star;
    VectorXd beta_star;
    LinkKind link;
};

// CSV with header `i,arm,y,z_1..z_d1,p_1..p_d0`; doubles are written with 17
// significant digits so that a read-back reproduces every value exactly.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, int split_at);

}  // namespace adaptz
