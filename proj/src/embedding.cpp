#include "geovec/embedding.hpp"

#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <thread>

namespace geovec {

std::uint32_t Vocabulary::add_occurrence(std::string_view token, bool entity_position) {
    auto it = index_.find(std::string(token));
    std::uint32_t id;
    if (it == index_.end()) {
        id = static_cast<std::uint32_t>(tokens_.size());
        tokens_.emplace_back(token);
        counts_.push_back(0);
        entity_.push_back(0);
        index_.emplace(tokens_.back(), id);
    } else {
        id = it->second;
    }
    ++counts_[id];
    if (entity_position) entity_[id] = 1;
    cdf_.clear();
    return id;
}

std::uint32_t Vocabulary::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? 0xffffffffu : it->second;
}

const std::vector<double>& Vocabulary::negative_cdf() const {
    if (cdf_.empty() && !counts_.empty()) {
        cdf_.resize(counts_.size());
        double cum = 0.0;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            cum += std::pow(static_cast<double>(counts_[i]), 0.75);
            cdf_[i] = cum;
        }
        for (double& v : cdf_) v /= cum;
    }
    return cdf_;
}

std::uint32_t Vocabulary::sample_negative(double u) const {
    const std::vector<double>& cdf = negative_cdf();
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) return static_cast<std::uint32_t>(cdf.size() - 1);
    return static_cast<std::uint32_t>(it - cdf.begin());
}

TokenizedCorpus tokenize_corpus(std::istream& corpus_text, bool predicates_included) {
    TokenizedCorpus corpus;
    std::string line;
    while (std::getline(corpus_text, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::uint32_t> sentence;
        std::size_t pos = 0, idx = 0;
        while (pos <= line.size()) {
            std::size_t next = line.find(' ', pos);
            if (next == std::string::npos) next = line.size();
            if (next > pos) {
                const bool entity = !predicates_included || idx % 2 == 0;
                sentence.push_back(
                    corpus.vocab.add_occurrence({line.data() + pos, next - pos}, entity));
                ++idx;
            }
            pos = next + 1;
        }
        corpus.total_tokens += sentence.size();
        corpus.sentences.push_back(std::move(sentence));
    }
    return corpus;
}

namespace {

inline double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

inline double next_unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct WorkerStats {
    double loss_sum = 0.0;
    std::uint64_t pairs = 0;
};

// One SGD step for (hidden <- input rows, positive, negatives). `hidden` is
// the single input row (skip-gram) or the context mean (CBOW); the caller
// distributes `hidden_grad` back to the input rows. Returns the pair loss.
double pair_step(EmbeddingStorage& output, const Eigen::RowVectorXd& hidden,
                 std::uint32_t positive, std::span<const std::uint32_t> negatives, double lr,
                 Eigen::RowVectorXd& hidden_grad) {
    hidden_grad.setZero();
    double loss = 0.0;
    {
        auto row = output.row(positive);
        const double f = sigmoid(hidden.dot(row));
        loss -= std::log(std::max(f, 1e-300));
        const double g = f - 1.0;
        hidden_grad += g * row;
        row -= (lr * g) * hidden;
    }
    for (std::uint32_t n : negatives) {
        auto row = output.row(n);
        const double f = sigmoid(hidden.dot(row));
        loss -= std::log(std::max(1.0 - f, 1e-300));
        const double g = f;
        hidden_grad += g * row;
        row -= (lr * g) * hidden;
    }
    return loss;
}

void train_range(const TokenizedCorpus& corpus, const TrainConfig& cfg, EmbeddingStorage& input,
                 EmbeddingStorage& output, std::size_t begin, std::size_t end,
                 std::uint64_t rng_stream, std::atomic<std::uint64_t>& tokens_done,
                 WorkerStats& stats) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(rng_stream)));
    const std::uint64_t total_work =
        static_cast<std::uint64_t>(cfg.epochs) * std::max<std::uint64_t>(1, corpus.total_tokens);
    const double lr0 = cfg.learning_rate;
    double lr = lr0;

    Eigen::RowVectorXd hidden(cfg.dimension);
    Eigen::RowVectorXd hidden_grad(cfg.dimension);
    std::vector<std::uint32_t> negatives;
    std::vector<std::uint32_t> context;

    for (std::size_t s = begin; s < end; ++s) {
        const std::vector<std::uint32_t>& sentence = corpus.sentences[s];
        // Linear decay against global progress, floored.
        const std::uint64_t done = tokens_done.fetch_add(sentence.size());
        lr = std::max(lr0 * (1.0 - static_cast<double>(done) / static_cast<double>(total_work)),
                      lr0 * cfg.lr_floor);

        for (std::size_t center = 0; center < sentence.size(); ++center) {
            const std::uint32_t center_tok = sentence[center];
            const std::size_t span = 1 + static_cast<std::size_t>(rng() % cfg.window);
            context.clear();
            const std::size_t lo = center >= span ? center - span : 0;
            const std::size_t hi = std::min(sentence.size() - 1, center + span);
            for (std::size_t j = lo; j <= hi; ++j) {
                if (j != center) context.push_back(sentence[j]);
            }
            if (context.empty()) continue;

            if (cfg.mode == TrainMode::SkipGram) {
                for (std::uint32_t ctx : context) {
                    negatives.clear();
                    for (int k = 0; k < cfg.negatives; ++k) {
                        std::uint32_t n = corpus.vocab.sample_negative(next_unit_double(rng));
                        if (n != ctx) negatives.push_back(n);
                    }
                    hidden = input.row(center_tok);
                    stats.loss_sum += pair_step(output, hidden, ctx, negatives, lr, hidden_grad);
                    ++stats.pairs;
                    input.row(center_tok) -= lr * hidden_grad;
                }
            } else {
                negatives.clear();
                for (int k = 0; k < cfg.negatives; ++k) {
                    std::uint32_t n = corpus.vocab.sample_negative(next_unit_double(rng));
                    if (n != center_tok) negatives.push_back(n);
                }
                hidden.setZero();
                for (std::uint32_t ctx : context) hidden += input.row(ctx);
                hidden /= static_cast<double>(context.size());
                stats.loss_sum += pair_step(output, hidden, center_tok, negatives, lr, hidden_grad);
                ++stats.pairs;
                hidden_grad *= lr / static_cast<double>(context.size());
                for (std::uint32_t ctx : context) input.row(ctx) -= hidden_grad;
            }
        }
    }
}

}  // namespace

TrainResult train(const TokenizedCorpus& corpus, const TrainConfig& cfg) {
    if (corpus.sentences.empty() || corpus.vocab.size() == 0) {
        throw DataError("cannot train on an empty corpus");
    }
    if (cfg.dimension < 1 || cfg.window < 1 || cfg.epochs < 1 || cfg.learning_rate <= 0.0) {
        throw ConfigError("invalid training configuration");
    }

    TrainResult result;
    result.model.vocab = corpus.vocab;
    const std::uint32_t vocab = corpus.vocab.size();

    // Standard initialization: small uniform input vectors, zero outputs.
    result.model.input.resize(vocab, cfg.dimension);
    result.model.output = EmbeddingStorage::Zero(vocab, cfg.dimension);
    {
        std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x494e4954ull));
        const double scale = 0.5 / cfg.dimension;
        for (std::uint32_t i = 0; i < vocab; ++i) {
            for (int d = 0; d < cfg.dimension; ++d) {
                result.model.input(i, d) = (next_unit_double(rng) * 2.0 - 1.0) * scale;
            }
        }
    }
    corpus.vocab.negative_cdf();  // build once before workers share it

    std::atomic<std::uint64_t> tokens_done{0};
    const int workers = std::max(1, cfg.workers);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<WorkerStats> stats(static_cast<std::size_t>(workers));
        if (workers == 1) {
            train_range(corpus, cfg, result.model.input, result.model.output, 0,
                        corpus.sentences.size(), static_cast<std::uint64_t>(epoch), tokens_done,
                        stats[0]);
        } else {
            std::vector<std::thread> threads;
            const std::size_t chunk = (corpus.sentences.size() + workers - 1) / workers;
            for (int w = 0; w < workers; ++w) {
                const std::size_t begin = std::min(corpus.sentences.size(), w * chunk);
                const std::size_t end = std::min(corpus.sentences.size(), (w + 1) * chunk);
                if (begin >= end) break;
                threads.emplace_back([&, w, begin, end] {
                    train_range(corpus, cfg, result.model.input, result.model.output, begin, end,
                                static_cast<std::uint64_t>(epoch) * workers +
                                    static_cast<std::uint64_t>(w) + 0x100,
                                tokens_done, stats[static_cast<std::size_t>(w)]);
                });
            }
            for (std::thread& t : threads) t.join();
        }
        double loss_sum = 0.0;
        std::uint64_t pairs = 0;
        for (const WorkerStats& s : stats) {
            loss_sum += s.loss_sum;
            pairs += s.pairs;
        }
        const double epoch_loss = pairs ? loss_sum / static_cast<double>(pairs) : 0.0;
        if (!std::isfinite(epoch_loss)) {
            throw DataError("training diverged (NaN loss); lower the learning rate");
        }
        result.epoch_loss.push_back(epoch_loss);
        result.epoch_pairs.push_back(pairs);
    }
    return result;
}

double example_loss(const EmbeddingStorage& input, const EmbeddingStorage& output,
                    const TrainExample& ex) {
    Eigen::RowVectorXd hidden = Eigen::RowVectorXd::Zero(input.cols());
    for (std::uint32_t r : ex.input_rows) hidden += input.row(r);
    hidden /= static_cast<double>(ex.input_rows.size());

    double loss = -std::log(std::max(sigmoid(hidden.dot(output.row(ex.positive))), 1e-300));
    for (std::uint32_t n : ex.negatives) {
        loss -= std::log(std::max(sigmoid(-hidden.dot(output.row(n))), 1e-300));
    }
    return loss;
}

ExampleGradient example_gradient(const EmbeddingStorage& input, const EmbeddingStorage& output,
                                 const TrainExample& ex) {
    const auto dim = input.cols();
    Eigen::RowVectorXd hidden = Eigen::RowVectorXd::Zero(dim);
    for (std::uint32_t r : ex.input_rows) hidden += input.row(r);
    hidden /= static_cast<double>(ex.input_rows.size());

    ExampleGradient grad;
    Eigen::RowVectorXd hidden_grad = Eigen::RowVectorXd::Zero(dim);

    auto accumulate_output = [&](std::uint32_t row, double g) {
        auto [it, inserted] = grad.output_grad.try_emplace(row, Eigen::VectorXd::Zero(dim));
        it->second += g * hidden.transpose();
        hidden_grad += g * output.row(row);
    };
    accumulate_output(ex.positive, sigmoid(hidden.dot(output.row(ex.positive))) - 1.0);
    for (std::uint32_t n : ex.negatives) {
        accumulate_output(n, sigmoid(hidden.dot(output.row(n))));
    }

    const double share = 1.0 / static_cast<double>(ex.input_rows.size());
    for (std::uint32_t r : ex.input_rows) {
        auto [it, inserted] = grad.input_grad.try_emplace(r, Eigen::VectorXd::Zero(dim));
        it->second += share * hidden_grad.transpose();
    }
    return grad;
}

double gradient_check(TrainMode mode, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed ^ 0x47524144ull));
    const std::uint32_t vocab = 4 + static_cast<std::uint32_t>(rng() % 7);   // 4..10
    const Eigen::Index dim = 2 + static_cast<Eigen::Index>(rng() % 4);       // 2..5

    EmbeddingStorage input(vocab, dim), output(vocab, dim);
    for (std::uint32_t i = 0; i < vocab; ++i) {
        for (Eigen::Index d = 0; d < dim; ++d) {
            input(i, d) = next_unit_double(rng) - 0.5;
            output(i, d) = next_unit_double(rng) - 0.5;
        }
    }

    TrainExample ex;
    const std::uint32_t n_inputs = mode == TrainMode::SkipGram
                                       ? 1
                                       : 2 + static_cast<std::uint32_t>(rng() % 3);
    for (std::uint32_t i = 0; i < n_inputs; ++i) {
        ex.input_rows.push_back(static_cast<std::uint32_t>(rng() % vocab));
    }
    ex.positive = static_cast<std::uint32_t>(rng() % vocab);
    for (int k = 0; k < 3; ++k) {
        std::uint32_t n = static_cast<std::uint32_t>(rng() % vocab);
        while (n == ex.positive) n = static_cast<std::uint32_t>(rng() % vocab);
        ex.negatives.push_back(n);
    }

    const ExampleGradient analytic = example_gradient(input, output, ex);

    const double step = 1e-5;
    double max_rel = 0.0;
    auto check_matrix = [&](EmbeddingStorage& m,
                            const std::unordered_map<std::uint32_t, Eigen::VectorXd>& grads) {
        for (const auto& [row, grad] : grads) {
            for (Eigen::Index d = 0; d < dim; ++d) {
                const double saved = m(row, d);
                m(row, d) = saved + step;
                const double up = example_loss(input, output, ex);
                m(row, d) = saved - step;
                const double down = example_loss(input, output, ex);
                m(row, d) = saved;
                const double numeric = (up - down) / (2.0 * step);
                const double denom = std::max(1e-8, std::abs(numeric) + std::abs(grad(d)));
                max_rel = std::max(max_rel, std::abs(numeric - grad(d)) / denom);
            }
        }
    };
    check_matrix(input, analytic.input_grad);
    check_matrix(output, analytic.output_grad);
    return max_rel;
}

void export_embeddings(std::ostream& out, const EmbeddingMatrix& m, bool entities_only) {
    std::vector<std::uint32_t> rows;
    for (std::uint32_t i = 0; i < m.vocab.size(); ++i) {
        if (!entities_only || m.vocab.is_entity(i)) rows.push_back(i);
    }
    if (rows.empty()) {
        throw DataError("no tokens to export after filtering");
    }
    out << rows.size() << ' ' << m.input.cols() << '\n';
    for (std::uint32_t i : rows) {
        out << m.vocab.token(i);
        for (Eigen::Index d = 0; d < m.input.cols(); ++d) {
            out << ' ' << format_double(m.input(i, d));
        }
        out << '\n';
    }
}

LoadedEmbeddings load_embeddings(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty embeddings file");
    std::istringstream header(line);
    std::uint64_t count = 0, dim = 0;
    if (!(header >> count >> dim) || count == 0 || dim == 0) {
        throw DataError("bad embeddings header");
    }
    LoadedEmbeddings result;
    result.vectors.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    std::uint64_t row = 0;
    while (row < count && std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, ' ');
        if (fields.size() != dim + 1) {
            throw DataError("embeddings row " + std::to_string(row + 1) + ": expected " +
                            std::to_string(dim) + " values");
        }
        result.index.emplace(std::string(fields[0]), static_cast<std::uint32_t>(row));
        result.tokens.emplace_back(fields[0]);
        for (std::uint64_t d = 0; d < dim; ++d) {
            bool ok = true;
            result.vectors(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(d)) =
                parse_double(fields[d + 1], ok);
            if (!ok) throw DataError("embeddings row " + std::to_string(row + 1) + ": bad number");
        }
        ++row;
    }
    if (row != count) throw DataError("embeddings file truncated");
    return result;
}

}  // namespace geovec
