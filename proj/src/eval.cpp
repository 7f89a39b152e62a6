#include "geovec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace geovec {

ClassificationMetrics metrics(const ConfusionMatrix& cm) {
    const std::size_t k = cm.k;
    const double total = static_cast<double>(cm.total());
    if (total == 0.0) throw DataError("empty confusion matrix");

    ClassificationMetrics m;
    double trace = 0.0;
    std::vector<double> row_sum(k, 0.0), col_sum(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        trace += static_cast<double>(cm.at(i, i));
        for (std::size_t j = 0; j < k; ++j) {
            row_sum[i] += static_cast<double>(cm.at(i, j));
            col_sum[j] += static_cast<double>(cm.at(i, j));
        }
    }
    m.accuracy = trace / total;

    double f1_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double tp = static_cast<double>(cm.at(c, c));
        const double precision = col_sum[c] > 0.0 ? tp / col_sum[c] : 0.0;
        const double recall = row_sum[c] > 0.0 ? tp / row_sum[c] : 0.0;
        f1_sum += (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                             : 0.0;
    }
    m.macro_f1 = f1_sum / static_cast<double>(k);

    // Multiclass MCC, covariance form.
    double pt = 0.0, pp = 0.0, tt = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        pt += col_sum[c] * row_sum[c];
        pp += col_sum[c] * col_sum[c];
        tt += row_sum[c] * row_sum[c];
    }
    const double numerator = trace * total - pt;
    const double denominator = std::sqrt(total * total - pp) * std::sqrt(total * total - tt);
    m.mcc = denominator > 0.0 ? numerator / denominator : 0.0;
    return m;
}

namespace {

struct Dataset {
    EmbeddingStorage x;           // n x d
    std::vector<std::size_t> y;   // class indices
};

Dataset gather(const LoadedEmbeddings& embeddings, std::span<const LabeledExample> examples,
               const std::map<std::string, std::size_t>& class_index,
               std::vector<std::string>& missing) {
    Dataset ds;
    ds.x.resize(static_cast<Eigen::Index>(examples.size()), embeddings.vectors.cols());
    ds.y.reserve(examples.size());
    Eigen::Index row = 0;
    for (const LabeledExample& ex : examples) {
        const std::uint32_t r = embeddings.find(ex.node);
        if (r == LoadedEmbeddings::kInvalidRow) {
            missing.push_back(ex.node);
            continue;
        }
        ds.x.row(row++) = embeddings.vectors.row(r);
        ds.y.push_back(class_index.at(ex.label));
    }
    ds.x.conservativeResize(row, Eigen::NoChange);
    return ds;
}

ConfusionMatrix knn_classify(const Dataset& train, const Dataset& test, std::size_t k_classes,
                             int knn_k) {
    // Cosine distance: compare on normalized rows; zero vectors stay zero.
    EmbeddingStorage tr = train.x, te = test.x;
    for (EmbeddingStorage* m : {&tr, &te}) {
        for (Eigen::Index i = 0; i < m->rows(); ++i) {
            const double norm = m->row(i).norm();
            if (norm > 0.0) m->row(i) /= norm;
        }
    }
    const int k = std::min<int>(knn_k, static_cast<int>(tr.rows()));
    ConfusionMatrix cm(k_classes);
    std::vector<std::pair<double, std::size_t>> scored(static_cast<std::size_t>(tr.rows()));
    for (Eigen::Index t = 0; t < te.rows(); ++t) {
        Eigen::VectorXd sims = tr * te.row(t).transpose();
        for (Eigen::Index i = 0; i < tr.rows(); ++i) {
            scored[static_cast<std::size_t>(i)] = {-sims(i), static_cast<std::size_t>(i)};
        }
        // Ascending by distance; index breaks exact ties deterministically.
        std::partial_sort(scored.begin(), scored.begin() + k, scored.end());
        std::vector<std::size_t> votes(k_classes, 0);
        for (int i = 0; i < k; ++i) ++votes[train.y[scored[static_cast<std::size_t>(i)].second]];
        std::size_t best = 0;
        for (std::size_t c = 1; c < k_classes; ++c) {
            if (votes[c] > votes[best]) best = c;  // tie keeps the smaller index
        }
        ++cm.at(test.y[static_cast<std::size_t>(t)], best);
    }
    return cm;
}

ConfusionMatrix logistic_classify(const Dataset& train, const Dataset& test,
                                  std::size_t k_classes, double tolerance, int max_iterations) {
    const Eigen::Index n = train.x.rows();
    const Eigen::Index d = train.x.cols();

    // Features with a bias column; weights k x (d+1), zero init.
    EmbeddingStorage xb(n, d + 1);
    xb.leftCols(d) = train.x;
    xb.col(d).setOnes();
    EmbeddingStorage w = EmbeddingStorage::Zero(static_cast<Eigen::Index>(k_classes), d + 1);

    auto objective_and_grad = [&](const EmbeddingStorage& weights, EmbeddingStorage* grad) {
        EmbeddingStorage scores = xb * weights.transpose();  // n x k
        double obj = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = scores.row(i).maxCoeff();
            const double lse = mx + std::log((scores.row(i).array() - mx).exp().sum());
            scores.row(i) = (scores.row(i).array() - lse).exp();  // softmax in place
            obj -= std::log(std::max(scores(i, static_cast<Eigen::Index>(train.y[i])), 1e-300));
        }
        obj /= static_cast<double>(n);
        if (grad) {
            for (Eigen::Index i = 0; i < n; ++i) {
                scores(i, static_cast<Eigen::Index>(train.y[i])) -= 1.0;
            }
            *grad = (scores.transpose() * xb) / static_cast<double>(n);
        }
        return obj;
    };

    double step = 1.0;
    EmbeddingStorage grad;
    double obj = objective_and_grad(w, &grad);
    for (int it = 0; it < max_iterations; ++it) {
        EmbeddingStorage candidate = w - step * grad;
        double next = objective_and_grad(candidate, nullptr);
        if (next <= obj) {
            const bool converged = std::abs(obj - next) < tolerance;
            w = std::move(candidate);
            obj = objective_and_grad(w, &grad);
            step *= 1.1;
            if (converged) break;
        } else {
            step *= 0.5;
            if (step < 1e-12) break;
        }
    }

    ConfusionMatrix cm(k_classes);
    for (Eigen::Index t = 0; t < test.x.rows(); ++t) {
        Eigen::VectorXd score = w.leftCols(d) * test.x.row(t).transpose() + w.col(d);
        std::size_t best = 0;
        for (std::size_t c = 1; c < k_classes; ++c) {
            if (score(static_cast<Eigen::Index>(c)) > score(static_cast<Eigen::Index>(best))) {
                best = c;
            }
        }
        ++cm.at(test.y[static_cast<std::size_t>(t)], best);
    }
    return cm;
}

}  // namespace

ConfusionMatrix classify(const LoadedEmbeddings& embeddings, const LabeledSplit& split,
                         const ClassifyOptions& options) {
    if (split.train.empty() || split.test.empty()) {
        throw DataError("classification needs non-empty train and test sets");
    }
    // Classes sorted by label; ties elsewhere resolve to the smallest index.
    std::map<std::string, std::size_t> class_index;
    for (const auto& ex : split.train) class_index.emplace(ex.label, 0);
    for (const auto& ex : split.test) class_index.emplace(ex.label, 0);
    std::size_t next = 0;
    for (auto& [label, idx] : class_index) idx = next++;

    std::vector<std::string> missing;
    Dataset train = gather(embeddings, split.train, class_index, missing);
    Dataset test = gather(embeddings, split.test, class_index, missing);
    if (!missing.empty()) {
        std::string msg = "labeled nodes without embeddings:";
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += ' ' + missing[i];
        if (missing.size() > 20) msg += " (+" + std::to_string(missing.size() - 20) + " more)";
        throw DataError(msg);
    }

    ConfusionMatrix cm = options.model == ClassifierKind::Knn
                             ? knn_classify(train, test, class_index.size(), options.knn_k)
                             : logistic_classify(train, test, class_index.size(),
                                                 options.tolerance, options.max_iterations);
    cm.labels.reserve(class_index.size());
    for (const auto& [label, _] : class_index) cm.labels.push_back(label);
    return cm;
}

FloodingEvalResult flooding_accuracy(
    const GeometryStore& store, std::span<const std::pair<NodeId, std::string>> ground_truth,
    const std::unordered_map<std::string, Geometry>& boundaries) {
    if (ground_truth.empty()) throw DataError("empty flooding ground truth");
    FloodingEvalResult result;
    result.total = ground_truth.size();
    for (const auto& [node, region] : ground_truth) {
        auto boundary = boundaries.find(region);
        if (boundary == boundaries.end()) {
            throw DataError("no boundary polygon for region '" + region + "'");
        }
        auto assignment = store.assignments.find(node);
        if (assignment == store.assignments.end() || assignment->second.geometry.empty()) {
            ++result.missing_geometry;
            continue;
        }
        CentroidAccumulator acc;
        for (GeometryId id : assignment->second.geometry) acc.add(store.table.at(id));
        if (point_in_polygon(acc.finalize(), boundary->second)) ++result.hits;
    }
    result.accuracy = static_cast<double>(result.hits) / static_cast<double>(result.total);
    return result;
}

HoldoutResult flooding_holdout(const KnowledgeGraph& g, const GeometryStore& original,
                               const HoldoutOptions& options,
                               const std::unordered_map<NodeId, std::string>* regions,
                               const std::unordered_map<std::string, Geometry>* boundaries) {
    std::vector<NodeId> geographic;
    for (const auto& [v, ng] : original.assignments) {
        if (ng.iteration == 0) geographic.push_back(v);
    }
    std::sort(geographic.begin(), geographic.end());
    if (geographic.size() < 2) throw DataError("not enough geographic nodes for a hold-out");

    std::mt19937_64 rng(splitmix64(options.seed ^ 0x484f4c44ull));
    std::shuffle(geographic.begin(), geographic.end(), rng);
    std::size_t held = std::max<std::size_t>(
        1, static_cast<std::size_t>(options.test_fraction * static_cast<double>(geographic.size())));
    held = std::min(held, geographic.size() - 1);

    std::set<NodeId> hidden(geographic.begin(), geographic.begin() + static_cast<long>(held));
    GeometryStore reduced;
    for (const auto& [v, ng] : original.assignments) {
        if (ng.iteration != 0 || hidden.count(v)) continue;
        for (GeometryId id : ng.geometry) reduced.assign_original(v, original.table.at(id));
    }
    GeometryStore flooded = flood(g, std::move(reduced));

    HoldoutResult result;
    result.held_out = held;
    for (NodeId v : hidden) {
        auto it = flooded.assignments.find(v);
        if (it == flooded.assignments.end()) continue;
        ++result.flooded;
        CentroidAccumulator acc;
        for (GeometryId id : it->second.geometry) acc.add(flooded.table.at(id));
        const GeoPoint predicted = acc.finalize();
        bool hit = false;
        if (regions && boundaries) {
            auto region = regions->find(v);
            if (region != regions->end()) {
                auto boundary = boundaries->find(region->second);
                if (boundary == boundaries->end()) {
                    throw DataError("no boundary polygon for region '" + region->second + "'");
                }
                hit = point_in_polygon(predicted, boundary->second);
            }
        } else {
            CentroidAccumulator truth;
            for (GeometryId id : original.assignments.at(v).geometry) {
                truth.add(original.table.at(id));
            }
            hit = geodesic_distance_km(predicted, truth.finalize()) <= options.threshold_km;
        }
        if (hit) ++result.hits;
    }
    result.accuracy = static_cast<double>(result.hits) / static_cast<double>(result.held_out);
    return result;
}

GraphStatistics graph_statistics(const KnowledgeGraph& g, std::span<const WeightedEdge> edges) {
    GraphStatistics stats;
    stats.nodes = g.node_count();
    stats.triples = g.triples().size();
    if (stats.nodes > 0) {
        stats.average_degree =
            2.0 * static_cast<double>(stats.triples) / static_cast<double>(stats.nodes);
        std::uint64_t neighbor_sum = 0;
        for (NodeId v = 0; v < g.node_count(); ++v) neighbor_sum += g.neighbors(v).size();
        stats.average_unique_neighbors =
            static_cast<double>(neighbor_sum) / static_cast<double>(stats.nodes);
    }
    double weight_sum = 0.0, geo_weight_sum = 0.0, distance_sum = 0.0;
    for (const WeightedEdge& e : edges) {
        weight_sum += e.weight;
        if (e.distance_km) {
            ++stats.edges_with_distance;
            geo_weight_sum += e.weight;
            distance_sum += *e.distance_km;
        }
    }
    if (!edges.empty()) {
        stats.average_weight_all = weight_sum / static_cast<double>(edges.size());
    }
    if (stats.edges_with_distance > 0) {
        stats.average_edge_distance_km =
            distance_sum / static_cast<double>(stats.edges_with_distance);
        stats.average_weight_geographic =
            geo_weight_sum / static_cast<double>(stats.edges_with_distance);
    }
    return stats;
}

std::vector<LabeledExample> load_labels_tsv(std::istream& in) {
    std::vector<LabeledExample> out;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw ParseError("labels row " + std::to_string(line_no) +
                             ": expected node<TAB>label");
        }
        out.push_back(LabeledExample{std::string(fields[0]), std::string(fields[1])});
    }
    return out;
}

std::unordered_map<std::string, Geometry> load_boundaries_tsv(std::istream& in) {
    std::unordered_map<std::string, Geometry> out;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0].empty()) {
            throw ParseError("boundaries row " + std::to_string(line_no) +
                             ": expected region<TAB>wkt");
        }
        Geometry geom = parse_wkt(fields[1]);
        if (!geom.get_if<Polygon>() && !geom.get_if<MultiPolygon>()) {
            throw DataError("boundaries row " + std::to_string(line_no) +
                            ": region boundary must be POLYGON or MULTIPOLYGON");
        }
        out.emplace(std::string(fields[0]), std::move(geom));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_regions_tsv(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw ParseError("regions row " + std::to_string(line_no) +
                             ": expected node<TAB>region");
        }
        out.emplace_back(std::string(fields[0]), std::string(fields[1]));
    }
    return out;
}

LabeledSplit split_labels(std::span<const LabeledExample> labeled, double train_fraction,
                          std::uint64_t seed) {
    if (labeled.empty()) throw DataError("no labeled nodes");
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw ConfigError("train_fraction must lie strictly between 0 and 1");
    }
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(splitmix64(seed ^ 0x53504c49ull));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t train_n = static_cast<std::size_t>(train_fraction * labeled.size());
    train_n = std::clamp<std::size_t>(train_n, 1, labeled.size() - 1);
    LabeledSplit split;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < train_n ? split.train : split.test).push_back(labeled[order[i]]);
    }
    return split;
}

}  // namespace geovec
