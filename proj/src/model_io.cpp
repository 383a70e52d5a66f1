#include "nlistack/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "nlistack/error.hpp"

namespace nlistack {

namespace {

using nlohmann::json;

constexpr const char* kFormatMarker = "nlistack-stacked-model";
constexpr int kFormatVersion = 1;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    Eigen::MatrixXd m(rows, cols);
    const json& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows) {
        throw DataError("model archive matrix has inconsistent row count");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = data.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw DataError("model archive matrix has inconsistent column count");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json values = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        values.push_back(v(i));
    }
    return values;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    }
    return v;
}

json spec_to_json(const FeatureSpec& spec) {
    std::vector<std::string> words(spec.function_words.words.begin(),
                                   spec.function_words.words.end());
    std::sort(words.begin(), words.end());
    return json{{"type", feature_type_name(spec.type)},
                {"n", spec.n},
                {"min_df", spec.min_df},
                {"tfidf", spec.tfidf},
                {"function_words", words}};
}

FeatureSpec spec_from_json(const json& j) {
    FeatureSpec spec;
    spec.type = feature_type_from_name(j.at("type").get<std::string>());
    spec.n = j.at("n").get<int>();
    spec.min_df = j.at("min_df").get<int>();
    spec.tfidf = j.at("tfidf").get<bool>();
    for (const json& word : j.at("function_words")) {
        spec.function_words.words.insert(word.get<std::string>());
    }
    return spec;
}

json space_to_json(const FeatureSpace& space) {
    return json{{"spec", spec_to_json(space.spec)},
                {"feature_names", space.feature_names},
                {"train_frequency", space.train_frequency},
                {"idf", space.idf}};
}

FeatureSpace space_from_json(const json& j) {
    FeatureSpace space;
    space.spec = spec_from_json(j.at("spec"));
    space.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    space.train_frequency = j.at("train_frequency").get<std::vector<int>>();
    space.idf = j.at("idf").get<std::vector<double>>();
    if (space.train_frequency.size() != space.feature_names.size()) {
        throw DataError("model archive feature space has mismatched frequency table");
    }
    space.vocabulary.reserve(space.feature_names.size());
    for (std::size_t i = 0; i < space.feature_names.size(); ++i) {
        space.vocabulary.emplace(space.feature_names[i], static_cast<int>(i));
    }
    return space;
}

json linear_to_json(const LinearModel& model) {
    return json{{"weights", model.weights}, {"bias", model.bias}, {"labels", model.labels}};
}

LinearModel linear_from_json(const json& j) {
    LinearModel model;
    model.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    model.bias = j.at("bias").get<std::vector<double>>();
    model.labels = j.at("labels").get<std::vector<std::string>>();
    if (model.weights.size() != model.labels.size() || model.bias.size() != model.labels.size()) {
        throw DataError("model archive linear model has mismatched class counts");
    }
    return model;
}

json tree_to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes) {
        nodes.push_back(json{{"feature", node.feature},
                             {"threshold", node.threshold},
                             {"left", node.left},
                             {"right", node.right},
                             {"class_probs", node.class_probs}});
    }
    return json{{"class_count", tree.class_count}, {"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const json& j) {
    DecisionTree tree;
    tree.class_count = j.at("class_count").get<int>();
    for (const json& n : j.at("nodes")) {
        TreeNode node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.class_probs = n.at("class_probs").get<std::vector<double>>();
        tree.nodes.push_back(std::move(node));
    }
    return tree;
}

json meta_model_to_json(const MetaModel& model) {
    json qda_inv = json::array();
    for (const Eigen::MatrixXd& m : model.qda_inv) {
        qda_inv.push_back(matrix_to_json(m));
    }
    return json{{"algorithm", meta_algorithm_name(model.algorithm)},
                {"class_count", model.class_count},
                {"dim", model.dim},
                {"W", matrix_to_json(model.W)},
                {"b", vector_to_json(model.b)},
                {"means", matrix_to_json(model.means)},
                {"log_priors", vector_to_json(model.log_priors)},
                {"lda_inv", matrix_to_json(model.lda_inv)},
                {"qda_inv", std::move(qda_inv)},
                {"qda_logdet", vector_to_json(model.qda_logdet)},
                {"train_Z", matrix_to_json(model.train_Z)},
                {"train_y", model.train_y},
                {"knn_k", model.knn_k},
                {"tree", tree_to_json(model.tree)}};
}

MetaModel meta_model_from_json(const json& j) {
    MetaModel model;
    model.algorithm = meta_algorithm_from_name(j.at("algorithm").get<std::string>());
    model.class_count = j.at("class_count").get<int>();
    model.dim = j.at("dim").get<int>();
    model.W = matrix_from_json(j.at("W"));
    model.b = vector_from_json(j.at("b"));
    model.means = matrix_from_json(j.at("means"));
    model.log_priors = vector_from_json(j.at("log_priors"));
    model.lda_inv = matrix_from_json(j.at("lda_inv"));
    for (const json& m : j.at("qda_inv")) {
        model.qda_inv.push_back(matrix_from_json(m));
    }
    model.qda_logdet = vector_from_json(j.at("qda_logdet"));
    model.train_Z = matrix_from_json(j.at("train_Z"));
    model.train_y = j.at("train_y").get<std::vector<int>>();
    model.knn_k = j.at("knn_k").get<int>();
    model.tree = tree_from_json(j.at("tree"));
    return model;
}

json meta_layer_to_json(const MetaLayer& layer) {
    json members = json::array();
    for (const MetaModel& member : layer.members) {
        members.push_back(meta_model_to_json(member));
    }
    json trees = json::array();
    for (const DecisionTree& tree : layer.trees) {
        trees.push_back(tree_to_json(tree));
    }
    return json{{"kind", meta_ensemble_kind_name(layer.kind)},
                {"algorithm", meta_algorithm_name(layer.spec.algorithm)},
                {"hyper", layer.spec.hyper},
                {"class_count", layer.class_count},
                {"dim", layer.dim},
                {"members", std::move(members)},
                {"trees", std::move(trees)},
                {"alphas", layer.alphas}};
}

MetaEnsembleKind meta_ensemble_kind_from_archive(const std::string& name) {
    for (MetaEnsembleKind kind :
         {MetaEnsembleKind::single, MetaEnsembleKind::bagging, MetaEnsembleKind::random_forest,
          MetaEnsembleKind::extra_trees, MetaEnsembleKind::adaboost}) {
        if (name == meta_ensemble_kind_name(kind)) {
            return kind;
        }
    }
    throw DataError("model archive names unknown meta-ensemble kind \"" + name + "\"");
}

MetaLayer meta_layer_from_json(const json& j) {
    MetaLayer layer;
    layer.kind = meta_ensemble_kind_from_archive(j.at("kind").get<std::string>());
    layer.spec.algorithm = meta_algorithm_from_name(j.at("algorithm").get<std::string>());
    layer.spec.hyper = j.at("hyper").get<std::map<std::string, double>>();
    layer.class_count = j.at("class_count").get<int>();
    layer.dim = j.at("dim").get<int>();
    for (const json& member : j.at("members")) {
        layer.members.push_back(meta_model_from_json(member));
    }
    for (const json& tree : j.at("trees")) {
        layer.trees.push_back(tree_from_json(tree));
    }
    layer.alphas = j.at("alphas").get<std::vector<double>>();
    return layer;
}

} // namespace

void save_stacked_model(const StackedModel& model, std::ostream& out) {
    json bases = json::array();
    for (const TrainedBase& base : model.bases) {
        bases.push_back(json{{"name", base.name},
                             {"C", base.C},
                             {"space", space_to_json(base.space)},
                             {"model", linear_to_json(base.model)}});
    }
    const json document{{"format", kFormatMarker},
                        {"version", kFormatVersion},
                        {"labels", model.labels},
                        {"encoding", encoding_name(model.encoding)},
                        {"bases", std::move(bases)},
                        {"meta", meta_layer_to_json(model.meta)}};
    out << document.dump(1, '\t') << '\n';
    if (!out) {
        throw DataError("failed while writing model archive stream");
    }
}

void save_stacked_model(const StackedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open model archive for writing: " + path);
    }
    save_stacked_model(model, out);
    out.close();
    if (!out) {
        throw DataError("failed while writing model archive: " + path);
    }
}

StackedModel load_stacked_model(std::istream& in) {
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& error) {
        throw DataError(std::string("model archive is not valid JSON: ") + error.what());
    }
    try {
        if (!document.is_object() || document.value("format", std::string()) != kFormatMarker) {
            throw DataError("not a model archive (missing format marker)");
        }
        const int version = document.at("version").get<int>();
        if (version != kFormatVersion) {
            throw DataError("unsupported model archive version " + std::to_string(version) +
                            " (this build reads version " + std::to_string(kFormatVersion) + ")");
        }
        StackedModel model;
        model.labels = document.at("labels").get<std::vector<std::string>>();
        model.encoding = encoding_from_name(document.at("encoding").get<std::string>());
        for (const json& base_json : document.at("bases")) {
            TrainedBase base;
            base.name = base_json.at("name").get<std::string>();
            base.C = base_json.at("C").get<double>();
            base.space = space_from_json(base_json.at("space"));
            base.model = linear_from_json(base_json.at("model"));
            model.bases.push_back(std::move(base));
        }
        model.meta = meta_layer_from_json(document.at("meta"));
        return model;
    } catch (const json::exception& error) {
        throw DataError(std::string("model archive is structurally invalid: ") + error.what());
    }
}

StackedModel load_stacked_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open model archive: " + path);
    }
    return load_stacked_model(in);
}

} // namespace nlistack
