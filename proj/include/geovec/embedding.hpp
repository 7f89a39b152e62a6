#pragma once
// Skip-gram / CBOW embedding training with negative sampling over the walk
// corpus, plus the analytic-vs-numeric gradient check and word2vec-format
// text export.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "geovec/common.hpp"

namespace geovec {

enum class TrainMode { SkipGram, Cbow };

struct TrainConfig {
    int dimension = 100;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.025;  // linear decay to learning_rate * lr_floor
    double lr_floor = 1e-4;
    TrainMode mode = TrainMode::SkipGram;
    std::uint64_t seed = 1;
    int workers = 1;  // >1: lock-free concurrent updates, not bit-reproducible
};

using EmbeddingStorage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Token table over the corpus. Every token embeds (min count 1); the
// negative-sampling distribution is proportional to frequency^0.75.
class Vocabulary {
public:
    std::uint32_t add_occurrence(std::string_view token, bool entity_position);

    std::uint32_t size() const { return static_cast<std::uint32_t>(tokens_.size()); }
    const std::string& token(std::uint32_t id) const { return tokens_[id]; }
    std::uint64_t count(std::uint32_t id) const { return counts_[id]; }
    bool is_entity(std::uint32_t id) const { return entity_[id] != 0; }
    std::uint32_t find(std::string_view token) const;

    // Cumulative frequency^0.75 distribution; built on demand after counting.
    const std::vector<double>& negative_cdf() const;
    std::uint32_t sample_negative(double u) const;  // u in [0,1)

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::vector<char> entity_;
    std::unordered_map<std::string, std::uint32_t> index_;
    mutable std::vector<double> cdf_;
};

struct TokenizedCorpus {
    Vocabulary vocab;
    std::vector<std::vector<std::uint32_t>> sentences;
    std::uint64_t total_tokens = 0;
};

// Reads the walk-corpus text format (one walk per line, space-separated
// tokens). predicates_included tells which positions are entities.
TokenizedCorpus tokenize_corpus(std::istream& corpus_text, bool predicates_included);

struct EmbeddingMatrix {
    Vocabulary vocab;
    EmbeddingStorage input;   // |vocab| x dimension; the entity embeddings
    EmbeddingStorage output;
};

struct TrainResult {
    EmbeddingMatrix model;
    std::vector<double> epoch_loss;        // running-average pair loss per epoch
    std::vector<std::uint64_t> epoch_pairs;
};

// Optimizes the negative-sampling objective with SGD over (center, context)
// pairs inside a per-position window of random span 1..window. Single-worker
// runs are bit-reproducible for a fixed seed; multi-worker runs update the
// shared matrices without locks. Throws DataError on NaN loss or an empty
// corpus.
TrainResult train(const TokenizedCorpus& corpus, const TrainConfig& cfg);

// One training example: rows of the input matrix feeding the hidden vector
// (one row for skip-gram, the context set for CBOW), the positive output row,
// and the sampled negative rows (duplicates allowed).
struct TrainExample {
    std::vector<std::uint32_t> input_rows;
    std::uint32_t positive;
    std::vector<std::uint32_t> negatives;
};

// Negative-sampling loss of one example at the given parameters.
double example_loss(const EmbeddingStorage& input, const EmbeddingStorage& output,
                    const TrainExample& ex);

// Analytic gradient, accumulated per touched row.
struct ExampleGradient {
    std::unordered_map<std::uint32_t, Eigen::VectorXd> input_grad;
    std::unordered_map<std::uint32_t, Eigen::VectorXd> output_grad;
};
ExampleGradient example_gradient(const EmbeddingStorage& input, const EmbeddingStorage& output,
                                 const TrainExample& ex);

// Max relative error between the analytic gradient and central finite
// differences (step 1e-5) on a random model with vocab <= 10, dimension <= 5.
double gradient_check(TrainMode mode, std::uint64_t seed);

// word2vec text format: "<count> <dimension>" then one token per line with
// its input vector. entities_only drops predicate tokens. Throws DataError
// when the filter leaves nothing.
void export_embeddings(std::ostream& out, const EmbeddingMatrix& m, bool entities_only);

struct LoadedEmbeddings {
    std::vector<std::string> tokens;
    EmbeddingStorage vectors;
    std::unordered_map<std::string, std::uint32_t> index;

    // Row of a token's vector, or kInvalidRow.
    static constexpr std::uint32_t kInvalidRow = 0xffffffffu;
    std::uint32_t find(std::string_view token) const {
        auto it = index.find(std::string(token));
        return it == index.end() ? kInvalidRow : it->second;
    }
};

LoadedEmbeddings load_embeddings(std::istream& in);

}  // namespace geovec
