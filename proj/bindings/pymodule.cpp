#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "cbpir/analysis.hpp"
#include "cbpir/attack.hpp"
#include "cbpir/errors.hpp"
#include "cbpir/rng.hpp"
#include "cbpir/scheme.hpp"

namespace py = pybind11;
using namespace cbpir;

namespace {

// seed streams shared with the command-line tool
constexpr std::uint64_t kStreamDb = 0;
constexpr std::uint64_t kStreamRetrieve = 1;
constexpr std::uint64_t kStreamAttack = 2;

py::object py_int(const mpz_class& v) {
    const std::string s = v.get_str();
    return py::reinterpret_steal<py::object>(PyLong_FromString(s.c_str(), nullptr, 10));
}

std::string rational_str(const mpq_class& r) {
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Bytes to_bytes(const py::bytes& data) {
    const std::string buf = data;
    return Bytes(buf.begin(), buf.end());
}

py::bytes from_bytes(const Bytes& data) {
    return py::bytes(reinterpret_cast<const char*>(data.data()), data.size());
}

py::dict report_dict(const AttackReport& report) {
    py::list ranks;
    for (const auto& [deleted, rank] : report.ranks)
        ranks.append(py::make_tuple(deleted, rank));
    py::dict d;
    d["ranks"] = ranks;
    d["inferred"] = report.inferred ? py::cast(*report.inferred) : py::none();
    d["success"] = report.success;
    d["ops"] = report.elimination_ops;
    return d;
}

std::vector<Fq> random_row_of_weight(const SchemeParams& p, int wt, Rng& rng) {
    if (wt < 1 || wt > p.m)
        throw ParamError("weight must lie in [1, m]");
    std::vector<Fq> row(p.m, 0u);
    for (int placed = 0; placed < wt;) {
        const auto pos = rng.below(static_cast<std::uint32_t>(p.m));
        if (row[pos] == 0) {
            row[pos] = static_cast<Fq>(rng.below_nonzero(p.q()));
            ++placed;
        }
    }
    return row;
}

} // namespace

PYBIND11_MODULE(_cbpir, m) {
    m.doc() = "single-server computational PIR laboratory";

    py::register_exception<Error>(m, "CbpirError");

    py::class_<SchemeParams>(m, "Params")
        .def(py::init([](int b, int s, int v, int n, int k, int m_, int L, int f,
                         int weight_target) {
                 SchemeParams p;
                 p.b = b;
                 p.s = s;
                 p.v = v;
                 p.n = n;
                 p.k = k;
                 p.m = m_;
                 p.L = L;
                 p.f = f;
                 p.target_weight = weight_target;
                 return p;
             }),
             py::arg("b"), py::arg("s"), py::arg("v"), py::arg("n"), py::arg("k"), py::arg("m"),
             py::arg("L"), py::arg("f"), py::arg("weight_target") = 0)
        .def_readwrite("b", &SchemeParams::b)
        .def_readwrite("s", &SchemeParams::s)
        .def_readwrite("v", &SchemeParams::v)
        .def_readwrite("n", &SchemeParams::n)
        .def_readwrite("k", &SchemeParams::k)
        .def_readwrite("m", &SchemeParams::m)
        .def_readwrite("L", &SchemeParams::L)
        .def_readwrite("f", &SchemeParams::f)
        .def_readwrite("weight_target", &SchemeParams::target_weight)
        .def("delta", &SchemeParams::delta)
        .def("ns", &SchemeParams::ns)
        .def("q", &SchemeParams::q)
        .def("effective_weight_target", &SchemeParams::effective_weight_target)
        .def("validate", &SchemeParams::validate)
        .def("hash", &SchemeParams::hash)
        .def("__eq__", [](const SchemeParams& a, const SchemeParams& b) { return a == b; })
        .def("__repr__", [](const SchemeParams& p) {
            return "Params(b=" + std::to_string(p.b) + ", s=" + std::to_string(p.s) +
                   ", v=" + std::to_string(p.v) + ", n=" + std::to_string(p.n) +
                   ", k=" + std::to_string(p.k) + ", m=" + std::to_string(p.m) +
                   ", L=" + std::to_string(p.L) + ", f=" + std::to_string(p.f) + ")";
        });

    m.def(
        "gen_db",
        [](const SchemeParams& p, std::uint64_t seed) {
            p.validate();
            Rng rng(mix_seed(seed, kStreamDb));
            return from_bytes(database_to_bytes(p, Database::random(p, rng)));
        },
        py::arg("params"), py::arg("seed"),
        "serialized uniform random database, deterministic per seed");

    m.def(
        "retrieve_local",
        [](const SchemeParams& p, const std::vector<int>& indices, std::uint64_t seed,
           const py::bytes& db_bytes) {
            p.validate();
            auto [db_params, db] = database_from_bytes(to_bytes(db_bytes));
            if (!(db_params == p))
                throw ParamError("database header disagrees with params");
            std::size_t upload_entries = 0, download_entries = 0;
            const RespondFn respond = [&](const QueryMatrix& q) {
                upload_entries += q.q.rows() * q.q.cols();
                ResponseMatrix r = server_respond(p, db, q);
                download_entries += r.a.rows() * r.a.cols();
                return r;
            };
            Rng rng(mix_seed(seed, kStreamRetrieve));
            const BatchResult batch = retrieve_batch(p, indices, rng, respond);
            bool verified = true;
            py::list files;
            mpz_class payload_bits = 0;
            for (std::size_t i = 0; i < indices.size(); ++i) {
                verified = verified && batch.files[i] == db.file(p, indices[i]);
                Bytes ser;
                batch.files[i].serialize(ser);
                files.append(from_bytes(ser));
                payload_bits +=
                    mpz_class(static_cast<unsigned long>(batch.files[i].rows() *
                                                         batch.files[i].cols())) *
                    p.b;
            }
            const mpz_class sb = mpz_class(p.s) * p.b;
            const mpz_class upload_bits = mpz_class(static_cast<unsigned long>(upload_entries)) * sb;
            const mpz_class download_bits =
                mpz_class(static_cast<unsigned long>(download_entries)) * sb;
            mpq_class measured(payload_bits, upload_bits + download_bits);
            measured.canonicalize();
            const RateBreakdown rb = rate_exact(p);
            py::dict out;
            out["files"] = files;
            out["verified"] = verified;
            out["upload_bits"] = py_int(upload_bits);
            out["download_bits"] = py_int(download_bits);
            out["payload_bits"] = py_int(payload_bits);
            out["measured_rate"] = rational_str(measured);
            out["exact_rate"] = rational_str(rb.exact_rate);
            out["rate_match"] = measured == rb.exact_rate;
            return out;
        },
        py::arg("params"), py::arg("indices"), py::arg("seed"), py::arg("db"),
        "full in-process batch retrieval against a serialized database");

    m.def(
        "attack_original_run",
        [](const SchemeParams& p, int index, std::uint64_t seed) {
            p.validate();
            Rng rng(mix_seed(seed, kStreamAttack));
            const QueryBundle bundle = gen_query_original(p, index, rng);
            AttackReport report = attack_original(bundle.query, p);
            const std::vector<int> truth = {index};
            report.judge(truth);
            py::dict d = report_dict(report);
            d["truth"] = truth;
            return d;
        },
        py::arg("params"), py::arg("index"), py::arg("seed"),
        "single-block rank attack against a fresh single-index query");

    m.def(
        "attack_modified_run",
        [](const SchemeParams& p, int weight, std::uint64_t seed, std::uint64_t max_subsets,
           int threads) {
            p.validate();
            Rng rng(mix_seed(seed, kStreamAttack));
            const std::vector<Fq> row = random_row_of_weight(p, weight, rng);
            std::vector<int> truth;
            for (int j = 0; j < p.m; ++j)
                if (row[j] != 0)
                    truth.push_back(j);
            const QueryBundle bundle = gen_query(p, row, rng);
            AttackOptions options;
            options.max_subsets = max_subsets;
            options.threads = threads;
            AttackReport report = attack_modified(bundle.query, p, weight, options);
            report.judge(truth);
            py::dict d = report_dict(report);
            d["truth"] = truth;
            return d;
        },
        py::arg("params"), py::arg("weight"), py::arg("seed"),
        py::arg("max_subsets") = std::uint64_t{1} << 20, py::arg("threads") = 1,
        "subset rank attack against a fresh query with a random weight-w secret");

    m.def(
        "rate_exact",
        [](const SchemeParams& p) {
            const RateBreakdown rb = rate_exact(p);
            py::dict d;
            d["exact_rate"] = rational_str(rb.exact_rate);
            d["asymptotic_rate"] = rational_str(rb.asymptotic_rate);
            d["upload_bits"] = py_int(rb.upload_bits);
            d["download_bits"] = py_int(rb.download_bits);
            d["payload_bits"] = py_int(rb.payload_bits);
            return d;
        },
        py::arg("params"));

    m.def("weight_threshold", &weight_threshold, py::arg("params"), py::arg("m"));
    m.def("m_zero", &m_zero, py::arg("params"), py::arg("wt"));
    m.def(
        "attack_complexity",
        [](const SchemeParams& p, int m_, int wt) {
            const ComplexityPoint cp = attack_complexity(p, m_, wt);
            return py::make_tuple(cp.log2_cost, std::string(region_name(cp.region)));
        },
        py::arg("params"), py::arg("m"), py::arg("wt"),
        "(log2 operation count, region) per the complexity figure");
    m.def("query_gen_cost", &query_gen_cost, py::arg("params"), py::arg("wt"));

    m.def("rate_table", [] {
        py::list rows;
        for (const RateRow& r : rate_table_rows()) {
            py::dict d;
            d["q"] = r.q;
            d["s"] = r.s;
            d["v"] = r.v;
            d["n"] = r.n;
            d["k"] = r.k;
            d["delta"] = r.delta;
            d["f"] = r.f;
            d["rate"] = rational_str(r.rate);
            rows.append(d);
        }
        return rows;
    });
}
