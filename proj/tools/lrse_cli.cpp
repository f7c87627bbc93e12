// lrse: owner, user and server roles of encrypted ranked search as one CLI.
//
//   owner:  keygen, synth, index
//   user:   trapdoor, similar
//   server: search
//   checks: verify, bench
//
// Exit codes: 0 success, 1 usage, 2 I/O or format error, 3 verification failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lrse/bench.hpp"
#include "lrse/lrse.hpp"
#include "lrse/verify.hpp"

namespace fs = std::filesystem;
using namespace lrse;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmbeddingArgs {
    std::string in_path;
    std::string out_path;
    bool lowercase = false;

    EmbeddingStore load() const {
        std::optional<fs::path> out;
        if (!out_path.empty()) out = out_path;
        return EmbeddingStore::load_text(in_path, out, LoadOptions{lowercase});
    }
};

void add_embedding_options(CLI::App* cmd, EmbeddingArgs& args, bool required = true) {
    auto* opt = cmd->add_option("--embeddings", args.in_path, "word2vec text file (IN vectors)")->check(CLI::ExistingFile);
    if (required) opt->required();
    cmd->add_option("--out-embeddings", args.out_path, "optional word2vec text file of OUT vectors")
        ->check(CLI::ExistingFile);
    cmd->add_flag("--lowercase", args.lowercase, "fold words to lower case on load and lookup");
}

std::optional<EmbeddingSide> parse_side(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s == "in" || s == "IN") return EmbeddingSide::in;
    if (s == "out" || s == "OUT") return EmbeddingSide::out;
    throw UsageError("side must be 'in' or 'out', got '" + s + "'");
}

SecretKey load_key(const std::string& path) { return io::deserialize_key(io::read_bytes(path)); }

std::vector<std::size_t> parse_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stoull(item));
        } catch (const std::exception&) {
            throw UsageError("bad list entry '" + item + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

struct KeygenArgs {
    std::size_t dim = 0;
    std::string embeddings;
    std::uint64_t seed = 0;
    double cond_max = linalg::kDefaultCondMax;
    std::string out;
};

int cmd_keygen(const KeygenArgs& a) {
    std::size_t n = a.dim;
    if (!a.embeddings.empty()) {
        n = EmbeddingStore::load_text(a.embeddings).dimension();
        if (a.dim != 0 && a.dim != n) throw UsageError("--dim disagrees with the embedding dimension");
    }
    if (n == 0) throw UsageError("give --dim or --embeddings");
    const auto key = gen_key(n, a.seed, a.cond_max);
    io::write_bytes(a.out, io::serialize_key(key));
    std::cerr << "key: n=" << n << " order=" << key.order() << " S ones=" << key.ones() << " -> " << a.out << '\n';
    return 0;
}

struct SynthArgs {
    std::string corpus;
    std::size_t dim = 100;
    std::uint64_t seed = 0;
    bool lowercase = false;
    bool dual = false;
    std::string out;
    std::string out_vectors;
};

int cmd_synth(const SynthArgs& a) {
    const auto dir = load_corpus_directory(a.corpus, TokenizeOptions{a.lowercase});
    std::vector<std::string> vocab;
    for (const auto& [term, df] : dir.corpus.document_frequencies()) vocab.push_back(term);
    std::sort(vocab.begin(), vocab.end());
    if (vocab.empty()) throw std::runtime_error("corpus has no tokens");
    const auto store = synthesize(a.dim, vocab, a.seed, !a.out_vectors.empty());
    std::ofstream os(a.out);
    if (!os) throw std::runtime_error("cannot write " + a.out);
    write_text(os, store, EmbeddingSide::in);
    if (!a.out_vectors.empty()) {
        std::ofstream oo(a.out_vectors);
        if (!oo) throw std::runtime_error("cannot write " + a.out_vectors);
        write_text(oo, store, EmbeddingSide::out);
    }
    std::cerr << "synthesized " << vocab.size() << " words at n=" << a.dim << '\n';
    return 0;
}

struct IndexArgs {
    std::string key;
    EmbeddingArgs emb;
    std::string corpus;
    std::string out;
    std::uint64_t seed = 0;
    double sigma = kDefaultSigma;
    std::size_t keywords = kDefaultKeywordCount;
    std::string doc_side;
};

int cmd_index(const IndexArgs& a) {
    const auto key = load_key(a.key);
    const auto store = a.emb.load();
    const auto dir = load_corpus_directory(a.corpus, TokenizeOptions{a.emb.lowercase});

    std::vector<DocumentInput> docs;
    docs.reserve(dir.corpus.size());
    for (std::size_t i = 0; i < dir.corpus.size(); ++i) {
        docs.push_back({i, extract_keywords(dir.corpus, i, a.keywords).words(), dir.files[i].filename().string()});
    }
    IndexOptions opt;
    opt.sigma = a.sigma;
    opt.seed = a.seed;
    opt.doc_side = parse_side(a.doc_side).value_or(default_sides(store).doc);

    IndexReport report;
    const auto index = build_index(docs, store, key, opt, &report);
    io::write_bytes(a.out, io::serialize_index(index));
    io::write_payload_refs(io::payload_sidecar(a.out), index);

    nlohmann::json meta = {{"documents", report.indexed},         {"unindexable", report.unindexable},
                           {"missing_keywords", report.missing_keywords}, {"doc_side", to_string(report.side_used)},
                           {"dual_available", store.dual_available()},   {"n", key.n}};
    std::cerr << meta.dump() << '\n';
    return 0;
}

struct TrapdoorArgs {
    std::string key;
    EmbeddingArgs emb;
    std::string query;
    std::uint64_t seed = 0;
    std::uint64_t query_id = 0;
    std::string out;
    std::string blinding_out;
    bool normalize = false;
    std::string query_side;
};

int cmd_trapdoor(const TrapdoorArgs& a) {
    const auto key = load_key(a.key);
    const auto store = a.emb.load();
    const auto terms = tokenize(a.query, TokenizeOptions{a.emb.lowercase});
    if (terms.empty()) throw UsageError("query has no tokens");

    QueryOptions opt;
    opt.seed = a.seed;
    opt.query_id = a.query_id;
    opt.normalize_query = a.normalize;
    opt.query_side = parse_side(a.query_side).value_or(default_sides(store).query);
    const auto bundle = gen_trapdoor(terms, store, key, opt);
    io::write_bytes(a.out, io::serialize_trapdoor(bundle.trapdoor));
    if (!a.blinding_out.empty()) {
        std::ofstream os(a.blinding_out);
        if (!os) throw std::runtime_error("cannot write " + a.blinding_out);
        os << nlohmann::json{{"r", bundle.blinding.r}, {"t", bundle.blinding.t}, {"query_id", a.query_id}}.dump(2)
           << '\n';
    }
    std::cerr << "trapdoor: " << terms.size() - bundle.missing_terms << " of " << terms.size()
              << " terms resolved, query side " << to_string(store.resolve(opt.query_side)) << '\n';
    return 0;
}

struct SearchArgs {
    std::string index;
    std::string trapdoor;
    std::size_t k = 50;
    std::string blinding;
};

int cmd_search(const SearchArgs& a) {
    auto index = io::deserialize_index(io::read_bytes(a.index));
    io::read_payload_refs(io::payload_sidecar(a.index), index);
    const auto td = io::deserialize_trapdoor(io::read_bytes(a.trapdoor));

    std::optional<BlindingSecret> blinding;
    if (!a.blinding.empty()) {
        std::ifstream in(a.blinding);
        if (!in) throw std::runtime_error("cannot read " + a.blinding);
        const auto j = nlohmann::json::parse(in);
        blinding = BlindingSecret{j.at("r").get<double>(), j.at("t").get<double>()};
    }

    std::cout << std::setprecision(17);
    for (const auto& hit : execute_query(index, td, a.k)) {
        std::cout << hit.doc_id << '\t' << hit.score;
        if (blinding) std::cout << '\t' << unblind(hit.score, *blinding);
        if (auto p = index.payload(hit.doc_id)) std::cout << '\t' << *p;
        std::cout << '\n';
    }
    return 0;
}

struct SimilarArgs {
    EmbeddingArgs emb;
    std::string term;
    std::size_t k = 10;
};

int cmd_similar(const SimilarArgs& a) {
    const auto store = a.emb.load();
    const auto target = store.lookup(a.term, EmbeddingSide::in);
    if (!target) throw std::runtime_error("term '" + a.term + "' is not in the embedding vocabulary");
    Eigen::Map<const Vector> t(target->data(), static_cast<Eigen::Index>(target->size()));
    const Vector tu = t.normalized();
    const std::string self = store.lowercase() ? fold_lower(a.term) : a.term;

    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t i = 0; i < store.size(); ++i) {
        if (store.words()[i] == self) continue;
        const auto v = store.vector_at(i);
        Eigen::Map<const Vector> e(v.data(), static_cast<Eigen::Index>(v.size()));
        scored.emplace_back(tu.dot(e) / e.norm(), store.words()[i]);
    }
    const auto keep = std::min(a.k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      [](const auto& x, const auto& y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
    std::cout << std::setprecision(6) << std::fixed;
    for (std::size_t i = 0; i < keep; ++i) std::cout << scored[i].second << '\t' << scored[i].first << '\n';
    return 0;
}

int cmd_verify(const verify::Options& o) {
    bool ok = true;
    for (const auto& r : verify::run_all(o)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
    }
    return ok ? 0 : kExitVerify;
}

struct BenchArgs {
    std::string scheme = "both";
    std::string dims;
    std::string mrse_dims = "2000,4000";
    std::string docs = "1000";
    std::string query_keywords;
    std::uint64_t seed = 1;
    std::string csv;
};

int cmd_bench(const BenchArgs& a) {
    bench::Config base;
    base.seed = a.seed;
    base.doc_counts = parse_list(a.docs);
    base.query_keyword_counts = parse_list(a.query_keywords);
    if (base.doc_counts.empty()) throw UsageError("--docs must list at least one count");

    std::vector<bench::Row> rows;
    if (a.scheme == "lrse" || a.scheme == "both") {
        auto cfg = base;
        cfg.dims = parse_list(a.dims.empty() ? "50,100,200,300" : a.dims);
        auto r = bench::run_lrse(cfg);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    if (a.scheme == "mrse" || a.scheme == "both") {
        auto cfg = base;
        cfg.dims = parse_list(a.scheme == "mrse" && !a.dims.empty() ? a.dims : a.mrse_dims);
        auto r = bench::run_mrse(cfg);
        rows.insert(rows.end(), r.begin(), r.end());
    }

    std::ofstream file;
    if (!a.csv.empty()) {
        file.open(a.csv);
        if (!file) throw std::runtime_error("cannot write " + a.csv);
    }
    std::ostream& out = a.csv.empty() ? std::cout : file;
    out << bench::csv_header() << '\n';
    for (const auto& r : rows) out << bench::to_csv(r) << '\n';

    std::cerr << "\nsummary (index build, seconds):\n";
    for (const auto& r : rows) {
        if (r.phase != "index") continue;
        std::cerr << "  " << std::setw(5) << r.scheme << " dim " << std::setw(6) << r.dimension << "  docs "
                  << std::setw(6) << r.doc_count << "  " << std::fixed << std::setprecision(4) << r.seconds << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-keyword ranked search over encrypted indexes using word embeddings"};
    app.require_subcommand(1);

    KeygenArgs keygen;
    auto* c_keygen = app.add_subcommand("keygen", "generate a secret key {S, M1, M2}");
    c_keygen->add_option("--dim", keygen.dim, "embedding dimension n");
    c_keygen->add_option("--embeddings", keygen.embeddings, "infer n from this word2vec file")->check(CLI::ExistingFile);
    c_keygen->add_option("--seed", keygen.seed, "random seed");
    c_keygen->add_option("--cond-max", keygen.cond_max, "1-norm condition bound for M1, M2")->check(CLI::Range(1.0 + 1e-12, 1e12));
    c_keygen->add_option("--out", keygen.out, "key file")->required();

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "write synthetic embeddings for a corpus vocabulary");
    c_synth->add_option("--corpus", synth.corpus, "directory of text files")->required()->check(CLI::ExistingDirectory);
    c_synth->add_option("--dim", synth.dim, "vector dimension")->check(CLI::PositiveNumber);
    c_synth->add_option("--seed", synth.seed, "random seed");
    c_synth->add_flag("--lowercase", synth.lowercase, "fold tokens to lower case");
    c_synth->add_option("--out", synth.out, "IN vectors output")->required();
    c_synth->add_option("--out-vectors", synth.out_vectors, "also write OUT vectors here");

    IndexArgs index;
    auto* c_index = app.add_subcommand("index", "build the encrypted index of a corpus directory");
    c_index->add_option("--key", index.key, "key file")->required()->check(CLI::ExistingFile);
    add_embedding_options(c_index, index.emb);
    c_index->add_option("--corpus", index.corpus, "directory of text files")->required()->check(CLI::ExistingDirectory);
    c_index->add_option("--out", index.out, "index file")->required();
    c_index->add_option("--seed", index.seed, "random seed for noise and splits");
    c_index->add_option("--sigma", index.sigma, "standard deviation of the per-document noise")->check(CLI::NonNegativeNumber);
    c_index->add_option("--keywords", index.keywords, "tf-idf keywords per document")->check(CLI::PositiveNumber);
    c_index->add_option("--doc-side", index.doc_side, "embedding side for documents (in|out)");

    TrapdoorArgs trapdoor;
    auto* c_trapdoor = app.add_subcommand("trapdoor", "encrypt a keyword query");
    c_trapdoor->add_option("--key", trapdoor.key, "key file")->required()->check(CLI::ExistingFile);
    add_embedding_options(c_trapdoor, trapdoor.emb);
    c_trapdoor->add_option("--query", trapdoor.query, "query text")->required();
    c_trapdoor->add_option("--seed", trapdoor.seed, "random seed for blinding and splits");
    c_trapdoor->add_option("--query-id", trapdoor.query_id, "query number (selects a substream)");
    c_trapdoor->add_option("--out", trapdoor.out, "trapdoor file")->required();
    c_trapdoor->add_option("--blinding-out", trapdoor.blinding_out, "write r and t here (keep private)");
    c_trapdoor->add_flag("--normalize-query", trapdoor.normalize, "unit-normalize the query mean");
    c_trapdoor->add_option("--query-side", trapdoor.query_side, "embedding side for the query (in|out)");

    SearchArgs search;
    auto* c_search = app.add_subcommand("search", "rank the index against a trapdoor");
    c_search->add_option("--index", search.index, "index file")->required()->check(CLI::ExistingFile);
    c_search->add_option("--trapdoor", search.trapdoor, "trapdoor file")->required()->check(CLI::ExistingFile);
    c_search->add_option("--k", search.k, "number of results")->check(CLI::PositiveNumber);
    c_search->add_option("--blinding", search.blinding, "blinding file; adds an unblinded score column")
        ->check(CLI::ExistingFile);

    SimilarArgs similar;
    auto* c_similar = app.add_subcommand("similar", "nearest vocabulary words to a term by cosine");
    add_embedding_options(c_similar, similar.emb);
    c_similar->add_option("--term", similar.term, "query word")->required();
    c_similar->add_option("--k", similar.k, "number of neighbours")->check(CLI::PositiveNumber);

    verify::Options vopt;
    auto* c_verify = app.add_subcommand("verify", "run the correctness self-checks");
    c_verify->add_option("--seed", vopt.seed, "random seed");
    c_verify->add_option("--trials", vopt.trials, "random instances per check")->check(CLI::PositiveNumber);

    BenchArgs bargs;
    auto* c_bench = app.add_subcommand("bench", "time index/trapdoor/query phases");
    c_bench->add_option("--scheme", bargs.scheme, "lrse, mrse or both")->check(CLI::IsMember({"lrse", "mrse", "both"}));
    c_bench->add_option("--dims", bargs.dims, "dimensions for the chosen scheme, comma separated");
    c_bench->add_option("--mrse-dims", bargs.mrse_dims, "baseline dictionary sizes when --scheme both");
    c_bench->add_option("--docs", bargs.docs, "document counts, comma separated");
    c_bench->add_option("--query-keywords", bargs.query_keywords, "query lengths for the trapdoor sweep");
    c_bench->add_option("--seed", bargs.seed, "random seed");
    c_bench->add_option("--csv", bargs.csv, "write the CSV table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*c_keygen) return cmd_keygen(keygen);
        if (*c_synth) return cmd_synth(synth);
        if (*c_index) return cmd_index(index);
        if (*c_trapdoor) return cmd_trapdoor(trapdoor);
        if (*c_search) return cmd_search(search);
        if (*c_similar) return cmd_similar(similar);
        if (*c_verify) return cmd_verify(vopt);
        if (*c_bench) return cmd_bench(bargs);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
