#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <set>
#include <iostream>
#include <sstream>
#include <thread>

#include "cbpir/analysis.hpp"
#include "cbpir/attack.hpp"
#include "cbpir/errors.hpp"
#include "cbpir/scheme.hpp"
#include "cbpir/wire.hpp"

using json = nlohmann::json;
using namespace cbpir;

namespace {

// seed streams, so one CLI seed cannot correlate independent random objects
constexpr std::uint64_t kStreamDb = 0;
constexpr std::uint64_t kStreamRetrieve = 1;
constexpr std::uint64_t kStreamAttack = 2;

struct ParamsFile {
    SchemeParams params;
    std::uint64_t seed = 0;
};

ParamsFile load_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open params file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("params file " + path + " is not valid JSON: " + e.what());
    }
    static const std::set<std::string> known = {"b", "s",    "v", "n",    "k",
                                               "m", "L",    "f", "seed", "weight_target"};
    for (const auto& item : doc.items())
        if (!known.contains(item.key()))
            throw Error("unknown key '" + item.key() + "' in params file");
    ParamsFile pf;
    try {
        pf.params.b = doc.at("b").get<int>();
        pf.params.s = doc.at("s").get<int>();
        pf.params.v = doc.at("v").get<int>();
        pf.params.n = doc.at("n").get<int>();
        pf.params.k = doc.at("k").get<int>();
        pf.params.m = doc.at("m").get<int>();
        pf.params.L = doc.at("L").get<int>();
        pf.params.f = doc.at("f").get<int>();
        pf.params.target_weight = doc.value("weight_target", 0);
        pf.seed = doc.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw Error("params file " + path + " is missing required integers: " + e.what());
    }
    return pf;
}

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::string& path, const Bytes& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out)
        throw Error("short write to " + path);
}

std::uint64_t fnv64(std::span<const std::uint8_t> data) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint8_t byte : data) {
        h ^= byte;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string rational_str(const mpq_class& r) {
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

json params_json(const SchemeParams& p) {
    return json{{"b", p.b}, {"s", p.s}, {"v", p.v}, {"n", p.n}, {"k", p.k},
                {"m", p.m}, {"L", p.L}, {"f", p.f}, {"weight_target", p.target_weight}};
}

std::uint64_t resolve_seed(const ParamsFile& pf, const CLI::Option* seed_opt,
                           std::uint64_t cli_seed) {
    return seed_opt->count() > 0 ? cli_seed : pf.seed;
}

int weight_of(std::span<const Fq> row) {
    int wt = 0;
    for (Fq x : row)
        wt += x != 0;
    return wt;
}

void cmd_validate(const std::string& params_path) {
    const ParamsFile pf = load_params_file(params_path);
    const SchemeParams& p = pf.params;
    p.validate();
    const RateBreakdown rb = rate_exact(p);
    std::cout << "b=" << p.b << " s=" << p.s << " v=" << p.v << " n=" << p.n << " k=" << p.k
              << " m=" << p.m << " L=" << p.L << " f=" << p.f << " q=" << p.q() << "\n"
              << "delta=" << p.delta() << " ns=" << p.ns() << "\n"
              << "effective_weight_target=" << p.effective_weight_target() << "\n"
              << "params_hash=" << hex64(p.hash()) << "\n"
              << "upload_bits=" << rb.upload_bits.get_str()
              << " download_bits=" << rb.download_bits.get_str()
              << " payload_bits=" << rb.payload_bits.get_str() << "\n"
              << "exact_rate=" << rational_str(rb.exact_rate) << "\n"
              << "asymptotic_rate=" << rational_str(rb.asymptotic_rate) << "\n"
              << "weight_threshold(m=" << p.m << ")=" << weight_threshold(p, p.m) << "\n"
              << "m_zero_increment=" << m_zero(p, 0) << "\n"
              << "m_zero(wt=" << p.effective_weight_target()
              << ")=" << m_zero(p, p.effective_weight_target()) << "\n";
}

void cmd_gendb(const std::string& params_path, const std::string& out_path,
               std::uint64_t seed) {
    const ParamsFile pf = load_params_file(params_path);
    pf.params.validate();
    Rng rng(mix_seed(seed, kStreamDb));
    const Database db = Database::random(pf.params, rng);
    const Bytes bytes = database_to_bytes(pf.params, db);
    write_file(out_path, bytes);
    std::cout << "wrote " << out_path << " (" << bytes.size() << " bytes, seed=" << seed
              << ", hash=" << hex64(fnv64(bytes)) << ")\n";
}

void cmd_serve(const std::string& db_path, std::string endpoint_arg) {
    if (endpoint_arg.empty())
        endpoint_arg = endpoint_from_env();
    std::optional<std::pair<SchemeParams, Database>> preloaded;
    if (!db_path.empty())
        preloaded = database_from_bytes(read_file(db_path));
    const Endpoint ep = parse_endpoint(endpoint_arg);
    WireServer server(ep, std::move(preloaded));
    std::cout << "listening on " << ep.host << ":" << server.port() << std::endl;

    static std::atomic<bool> interrupted{false};
    std::signal(SIGINT, [](int) { interrupted = true; });
    std::signal(SIGTERM, [](int) { interrupted = true; });
    while (!interrupted)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    std::cout << "stopped\n";
}

void cmd_retrieve(const std::string& params_path, const std::string& db_path,
                  const std::string& endpoint_arg, std::vector<int> j_set, std::uint64_t seed,
                  const std::string& out_path) {
    const ParamsFile pf = load_params_file(params_path);
    const SchemeParams p = pf.params;
    p.validate();
    if (j_set.size() != static_cast<std::size_t>(p.f))
        throw ParamError("need exactly f=" + std::to_string(p.f) + " indices, got " +
                         std::to_string(j_set.size()));

    std::optional<Database> local_db;
    if (!db_path.empty()) {
        auto [db_params, db] = database_from_bytes(read_file(db_path));
        if (!(db_params == p))
            throw ParamError("params file and database header disagree");
        local_db = std::move(db);
    }
    std::optional<WireClient> client;
    if (!endpoint_arg.empty()) {
        client.emplace(parse_endpoint(endpoint_arg));
        if (!(client->fetch_params() == p))
            throw ParamError("params file and server parameters disagree");
    }
    if (!local_db && !client)
        throw ParamError("retrieve needs --db and/or --endpoint");

    mpz_class upload_entries = 0, download_entries = 0;
    int num_queries = 0;
    const RespondFn respond = [&](const QueryMatrix& q) {
        upload_entries += static_cast<unsigned long>(q.q.rows() * q.q.cols());
        ++num_queries;
        ResponseMatrix r = client ? client->query(p, q) : server_respond(p, *local_db, q);
        download_entries += static_cast<unsigned long>(r.a.rows() * r.a.cols());
        return r;
    };

    Rng rng(mix_seed(seed, kStreamRetrieve));
    const BatchResult batch = retrieve_batch(p, j_set, rng, respond);

    bool verified = false;
    if (local_db) {
        for (std::size_t i = 0; i < j_set.size(); ++i)
            if (!(batch.files[i] == local_db->file(p, j_set[i])))
                throw Error("recovered file " + std::to_string(j_set[i]) +
                            " does not match the database");
        verified = true;
    }

    const mpz_class sb = mpz_class(p.s) * p.b;
    const mpz_class upload_bits = upload_entries * sb;
    const mpz_class download_bits = download_entries * sb;
    mpz_class payload_bits = 0;
    std::vector<std::string> file_hashes;
    for (const MatFq& file : batch.files) {
        payload_bits += mpz_class(static_cast<unsigned long>(file.rows() * file.cols())) * p.b;
        Bytes ser;
        file.serialize(ser);
        file_hashes.push_back(hex64(fnv64(ser)));
    }
    mpq_class measured(payload_bits, upload_bits + download_bits);
    measured.canonicalize();
    const RateBreakdown rb = rate_exact(p);
    if (measured != rb.exact_rate)
        throw Error("measured rate " + rational_str(measured) +
                    " deviates from the closed form " + rational_str(rb.exact_rate));

    json transcript = {
        {"command", "retrieve"},
        {"seed", seed},
        {"params_hash", hex64(p.hash())},
        {"params", params_json(p)},
        {"indices", j_set},
        {"over_wire", static_cast<bool>(client)},
        {"queries", num_queries},
        {"upload_bits", upload_bits.get_str()},
        {"download_bits", download_bits.get_str()},
        {"payload_bits", payload_bits.get_str()},
        {"measured_rate", rational_str(measured)},
        {"exact_rate", rational_str(rb.exact_rate)},
        {"rate_match", true},
        {"verified_against_db", verified},
        {"file_hashes", file_hashes},
    };
    const std::string text = transcript.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_file(out_path, Bytes(text.begin(), text.end()));
        std::cout << "retrieved " << j_set.size() << " file(s), rate "
                  << rational_str(measured) << ", transcript " << out_path << "\n";
    }
}

void cmd_attack(const std::string& params_path, const std::string& scheme, int trials,
                int weight_override, std::uint64_t seed, int threads, bool allow_large,
                const std::string& out_path) {
    const ParamsFile pf = load_params_file(params_path);
    const SchemeParams p = pf.params;
    p.validate();
    if (trials < 1)
        throw ParamError("need at least one trial");

    AttackOptions options;
    options.threads = threads;
    options.max_subsets = allow_large ? (1ull << 40) : 1000000;

    std::ostringstream csv;
    csv << "trial,deleted,rank\n";
    int successes = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(mix_seed(seed, kStreamAttack + 64 * static_cast<std::uint64_t>(t)));
        AttackReport report;
        std::vector<int> truth;
        int wt = 0;
        if (scheme == "original") {
            const int i = static_cast<int>(rng.below(static_cast<std::uint32_t>(p.m)));
            truth = {i};
            wt = 1;
            const QueryBundle bundle = gen_query_original(p, i, rng);
            report = attack_original(bundle.query, p);
        } else {
            std::vector<Fq> row;
            if (weight_override > 0) {
                if (weight_override > p.m)
                    throw ParamError("weight override exceeds m");
                row.assign(p.m, 0u);
                for (int placed = 0; placed < weight_override;) {
                    const auto pos = rng.below(static_cast<std::uint32_t>(p.m));
                    if (row[pos] == 0) {
                        row[pos] = static_cast<Fq>(rng.below_nonzero(p.q()));
                        ++placed;
                    }
                }
            } else {
                std::vector<int> plan_set;
                while (static_cast<int>(plan_set.size()) < p.f) {
                    const int j = static_cast<int>(rng.below(static_cast<std::uint32_t>(p.m)));
                    if (std::find(plan_set.begin(), plan_set.end(), j) == plan_set.end())
                        plan_set.push_back(j);
                }
                const SecretPlan plan = build_secret_plan(p, plan_set, rng);
                const auto r0 = plan.rows.row(0);
                row.assign(r0.begin(), r0.end());
            }
            for (int j = 0; j < p.m; ++j)
                if (row[j] != 0)
                    truth.push_back(j);
            wt = weight_of(row);
            const QueryBundle bundle = gen_query(p, row, rng);
            try {
                report = attack_modified(bundle.query, p, wt, options);
            } catch (const CapExceeded& e) {
                throw Error(std::string(e.what()) +
                            (allow_large ? "" : " (rerun with --allow-large)"));
            }
        }
        report.judge(truth);
        successes += report.success;
        for (const auto& [deleted, rank] : report.ranks) {
            csv << t << ',';
            for (std::size_t i = 0; i < deleted.size(); ++i)
                csv << (i ? " " : "") << deleted[i];
            csv << ',' << rank << '\n';
        }
        csv << t << ",summary," << scheme << "," << wt << ",";
        if (report.inferred) {
            for (std::size_t i = 0; i < report.inferred->size(); ++i)
                csv << (i ? " " : "") << (*report.inferred)[i];
        } else {
            csv << "-";
        }
        csv << ',' << (report.success ? 1 : 0) << ',' << report.elimination_ops << '\n';
    }
    char rate[32];
    std::snprintf(rate, sizeof rate, "%.4f", double(successes) / trials);
    csv << "total," << scheme << ',' << successes << ',' << trials << ',' << rate << '\n';

    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        const std::string text = csv.str();
        write_file(out_path, Bytes(text.begin(), text.end()));
        std::cout << "attack " << scheme << ": " << successes << "/" << trials
                  << " succeeded, report " << out_path << "\n";
    }
}

void cmd_tables(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto emit = [&](const char* name, void (*writer)(std::ostream&)) {
        const std::filesystem::path path = std::filesystem::path(out_dir) / name;
        std::ofstream os(path);
        if (!os)
            throw Error("cannot write " + path.string());
        writer(os);
        std::cout << "wrote " << path.string() << "\n";
    };
    emit("rates.csv", write_rates_csv);
    emit("fig3.csv", write_fig3_csv);
    emit("bounds.csv", write_bounds_csv);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-server computational PIR laboratory"};
    app.require_subcommand(1);

    std::string params_path, db_path, endpoint_arg, out_path, scheme = "original";
    std::uint64_t cli_seed = 0;
    std::vector<int> indices;
    int trials = 10, weight_override = 0, threads = 1;
    bool allow_large = false;

    auto* validate = app.add_subcommand("validate", "check parameters and print derived figures");
    validate->add_option("--params", params_path, "JSON parameter file")->required();

    auto* gendb = app.add_subcommand("gendb", "generate a uniform random database");
    gendb->add_option("--params", params_path, "JSON parameter file")->required();
    gendb->add_option("--out", out_path, "output database path")->required();
    auto* gendb_seed = gendb->add_option("--seed", cli_seed, "seed override");

    auto* serve = app.add_subcommand("serve", "serve a database over TCP");
    serve->add_option("--db", db_path, "database file (omit to await an upload)");
    serve->add_option("--endpoint", endpoint_arg,
                      "host:port (default: CBPIR_ADDR or 127.0.0.1:0)");

    auto* retrieve = app.add_subcommand("retrieve", "run one batch retrieval");
    retrieve->add_option("--params", params_path, "JSON parameter file")->required();
    retrieve->add_option("--db", db_path, "local database file");
    retrieve->add_option("--endpoint", endpoint_arg, "server to query");
    retrieve->add_option("--index", indices, "0-based file index (repeat f times)")->required();
    auto* retrieve_seed = retrieve->add_option("--seed", cli_seed, "seed override");
    retrieve->add_option("--out", out_path, "transcript path (default: stdout)");

    auto* attack = app.add_subcommand("attack", "Monte-Carlo rank attack against fresh queries");
    attack->add_option("--params", params_path, "JSON parameter file")->required();
    attack->add_option("--scheme", scheme, "original|modified")
        ->check(CLI::IsMember({"original", "modified"}));
    attack->add_option("--trials", trials, "number of Monte-Carlo trials")->default_val(10);
    attack->add_option("--weight", weight_override, "secret weight override (modified)");
    attack->add_option("--threads", threads, "rank-worker threads");
    attack->add_flag("--allow-large", allow_large, "lift the 10^6 subset enumeration guard");
    auto* attack_seed = attack->add_option("--seed", cli_seed, "seed override");
    attack->add_option("--out", out_path, "CSV report path (default: stdout)");

    auto* tables = app.add_subcommand("tables", "emit rates.csv, fig3.csv, bounds.csv");
    tables->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
        if (validate->parsed()) {
            cmd_validate(params_path);
        } else if (gendb->parsed()) {
            const ParamsFile pf = load_params_file(params_path);
            cmd_gendb(params_path, out_path, resolve_seed(pf, gendb_seed, cli_seed));
        } else if (serve->parsed()) {
            cmd_serve(db_path, endpoint_arg);
        } else if (retrieve->parsed()) {
            const ParamsFile pf = load_params_file(params_path);
            cmd_retrieve(params_path, db_path, endpoint_arg, indices,
                         resolve_seed(pf, retrieve_seed, cli_seed), out_path);
        } else if (attack->parsed()) {
            const ParamsFile pf = load_params_file(params_path);
            cmd_attack(params_path, scheme, trials, weight_override,
                       resolve_seed(pf, attack_seed, cli_seed), threads, allow_large, out_path);
        } else if (tables->parsed()) {
            cmd_tables(out_path);
        }
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
