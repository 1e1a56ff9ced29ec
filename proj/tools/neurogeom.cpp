// neurogeom - command-line driver for the medical-image geometry toolkit.
//
// Exit codes: 0 success, 1 usage, 2 malformed input file, 3 degenerate or
// rank-deficient data (also: check-topology on a non-sphere), 4 I/O failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <functional>
#include <set>
#include <iostream>
#include <string>

#include "neurogeom/affine.hpp"
#include "neurogeom/analyze_io.hpp"
#include "neurogeom/dti.hpp"
#include "neurogeom/gmm.hpp"
#include "neurogeom/marching_cubes.hpp"
#include "neurogeom/mask_ops.hpp"
#include "neurogeom/mesh_io.hpp"
#include "neurogeom/mesh_topology.hpp"
#include "neurogeom/morphometry.hpp"
#include "neurogeom/tracts.hpp"

namespace {

using neurogeom::format_g;
using json = nlohmann::ordered_json;

// Text lines or one JSON object, chosen by --json.
class Summary {
public:
    explicit Summary(bool as_json) : as_json_(as_json) {}

    template <typename T>
    void add(const std::string& key, const T& value) {
        if (as_json_) {
            obj_[key] = value;
        } else {
            std::ostringstream ss;
            if constexpr (std::is_same_v<T, bool>) {
                ss << (value ? "true" : "false");
            } else {
                ss << value;
            }
            lines_ += key + ": " + ss.str() + "\n";
        }
    }

    void flush() const {
        if (as_json_)
            std::cout << obj_.dump(2) << "\n";
        else
            std::cout << lines_;
    }

private:
    bool as_json_;
    json obj_;
    std::string lines_;
};

std::string dims_to_string(const std::array<std::size_t, 4>& dims) {
    std::string s;
    for (std::size_t i = 0; i < 4; ++i) s += (i ? " " : "") + std::to_string(dims[i]);
    return s;
}

std::string voxel_to_string(const std::array<double, 3>& v) {
    return format_g(v[0], 6) + " " + format_g(v[1], 6) + " " + format_g(v[2], 6);
}

neurogeom::Connectivity parse_connectivity(int c) {
    switch (c) {
        case 6: return neurogeom::Connectivity::faces;
        case 18: return neurogeom::Connectivity::edges;
        case 26: return neurogeom::Connectivity::corners;
        default: throw CLI::ValidationError("--connectivity must be 6, 18 or 26");
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Applies a flat `key = value` manifest: every key is the long name of a
// flag, and explicit command-line flags win. The manifest keys are appended
// as --key=value tokens, so they are parsed exactly like flags.
std::vector<std::string> apply_manifest(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string manifest_path;
    std::set<std::string> given;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& tok = args[i];
        if (tok.rfind("--", 0) != 0) continue;
        const std::string name = tok.substr(0, tok.find('='));
        given.insert(name);
        if (name == "--manifest") {
            if (tok.find('=') != std::string::npos)
                manifest_path = tok.substr(tok.find('=') + 1);
            else if (i + 1 < args.size())
                manifest_path = args[i + 1];
        }
    }
    if (manifest_path.empty()) return args;

    const auto bytes = neurogeom::read_file_bytes(manifest_path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw neurogeom::Error(neurogeom::ErrorClass::parse,
                                   "manifest line is not key = value: \"" + stripped + "\"");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw neurogeom::Error(neurogeom::ErrorClass::parse, "manifest key is empty");
        if (given.count("--" + key)) continue;  // explicit flags win
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace neurogeom;

    CLI::App app{"neurogeom: volumes, meshes and tensors from binary medical images"};
    app.require_subcommand(1);

    bool as_json = false;
    app.add_flag("--json", as_json, "print the summary as a single JSON object");
    int seed = 0;
    app.add_option("--seed", seed,
                   "seed for stochastic steps (reserved; every current step is deterministic)");

    std::function<int()> run;

    // ---- info -------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("info", "print volume header fields");
        auto file = std::make_shared<std::string>();
        sub->add_option("file,--file", *file, "volume file (.hdr or .nii)")->required();
        sub->callback([&, file] {
            run = [&, file]() {
                const Volume3D vol = load_volume(*file);
                const auto& h = vol.header();
                Summary out(as_json);
                out.add("file", *file);
                out.add("format", h.format == VolumeFormat::nifti1 ? "nifti1" : "analyze75");
                out.add("endianness", h.endianness == Endianness::big ? "big" : "little");
                out.add("dims", dims_to_string(h.dims));
                out.add("voxel_size", voxel_to_string(h.voxel_size));
                out.add("datatype", datatype_name(h.datatype));
                out.add("description", h.description);
                out.flush();
                return 0;
            };
        });
    }

    // ---- volume -----------------------------------------------------------
    {
        auto* sub = app.add_subcommand("volume", "voxel count and mm^3 of a binary mask");
        auto file = std::make_shared<std::string>();
        sub->add_option("file,--file", *file, "mask volume (.hdr or .nii)")->required();
        sub->callback([&, file] {
            run = [&, file]() {
                const auto mask = to_mask(load_volume(*file));
                const auto [count, mm3] = measure_volume(mask);
                Summary out(as_json);
                out.add("voxel_count", count);
                out.add("volume_mm3", mm3);
                out.flush();
                return 0;
            };
        });
    }

    // ---- fix-topology -----------------------------------------------------
    {
        auto* sub = app.add_subcommand(
            "fix-topology", "keep the largest component and close holes/handles");
        auto file = std::make_shared<std::string>();
        auto out_prefix = std::make_shared<std::string>();
        auto radius = std::make_shared<int>(1);
        auto conn = std::make_shared<int>(6);
        sub->add_option("file,--file", *file, "mask volume (.hdr)")->required();
        sub->add_option("--radius", *radius, "closing ball radius in voxels")->required();
        sub->add_option("--connectivity", *conn, "component adjacency: 6, 18 or 26");
        sub->add_option("--out", *out_prefix, "output Analyze pair prefix")->required();
        sub->callback([&, file, out_prefix, radius, conn] {
            run = [&, file, out_prefix, radius, conn]() {
                auto mask = to_mask(load_volume(*file));
                const auto before = measure_volume(mask);
                mask = largest_component(mask, parse_connectivity(*conn));
                mask = morphological_close(mask, *radius);
                const auto after = measure_volume(mask);
                save_analyze(to_volume(mask), *out_prefix + ".hdr");
                Summary out(as_json);
                out.add("voxels_before", before.first);
                out.add("voxels_after", after.first);
                out.add("out", *out_prefix + ".hdr");
                out.flush();
                return 0;
            };
        });
    }

    // ---- extract-surface ----------------------------------------------------
    {
        auto* sub = app.add_subcommand("extract-surface", "marching-cubes isosurface mesh");
        auto file = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        auto iso = std::make_shared<double>(0.5);
        auto pad = std::make_shared<int>(0);
        auto do_swap = std::make_shared<bool>(false);
        sub->add_option("file,--file", *file, "scalar volume (.hdr or .nii)")->required();
        sub->add_option("--iso", *iso, "isovalue");
        sub->add_option("--pad", *pad, "zero-pad each face by this many voxels first");
        sub->add_flag("--swap-xy", *do_swap, "swap x and y coordinates of the mesh");
        sub->add_option("--out", *out_path, "output mesh (.ply or .obj)")->required();
        sub->callback([&, file, out_path, iso, pad, do_swap] {
            run = [&, file, out_path, iso, pad, do_swap]() {
                Volume3D vol = load_volume(*file);
                if (*pad > 0) vol = pad_volume(vol, static_cast<std::size_t>(*pad));
                TriMesh mesh = marching_cubes(vol, *iso);
                if (*do_swap) mesh = swap_xy(mesh);
                save_mesh(mesh, *out_path);
                // a foreground touching the volume boundary leaves the mesh
                // open; report it rather than padding silently
                std::size_t open_edges = 0;
                for (const auto& [e, inc] : enumerate_edges(mesh))
                    if (inc == 1) ++open_edges;
                Summary out(as_json);
                out.add("vertices", mesh.vertex_count());
                out.add("faces", mesh.face_count());
                out.add("boundary_edges", open_edges);
                out.add("out", *out_path);
                out.flush();
                return 0;
            };
        });
    }

    // ---- check-topology -----------------------------------------------------
    {
        auto* sub = app.add_subcommand("check-topology",
                                       "validate mesh topology; exit 0 only for a sphere");
        auto file = std::make_shared<std::string>();
        sub->add_option("mesh,--mesh", *file, "mesh file (.ply or .obj)")->required();
        sub->callback([&, file] {
            run = [&, file]() {
                const auto report = validate(load_mesh(*file).mesh);
                Summary out(as_json);
                out.add("vertices", report.vertex_count);
                out.add("edges", report.edge_count);
                out.add("faces", report.face_count);
                out.add("chi", report.chi);
                out.add("boundary_edges", report.boundary_edges);
                out.add("nonmanifold_edges", report.nonmanifold_edges);
                out.add("components", report.components);
                if (report.genus)
                    out.add("genus", *report.genus);
                else
                    out.add("genus", "n/a");
                out.add("is_sphere", report.is_sphere);
                out.flush();
                return report.is_sphere ? 0 : 3;
            };
        });
    }

    // ---- register -----------------------------------------------------------
    {
        auto* sub = app.add_subcommand("register", "landmark least-squares registration");
        auto moving = std::make_shared<std::string>();
        auto fixed = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        auto rigid = std::make_shared<bool>(false);
        auto apply_path = std::make_shared<std::string>();
        auto out_mesh = std::make_shared<std::string>();
        sub->add_option("--moving", *moving, "moving landmark CSV")->required();
        sub->add_option("--fixed", *fixed, "fixed landmark CSV")->required();
        sub->add_flag("--rigid", *rigid, "restrict to rotation + translation");
        sub->add_option("--out", *out_path, "output 4x4 transform text file")->required();
        sub->add_option("--apply", *apply_path, "mesh to transform with the estimate");
        sub->add_option("--out-mesh", *out_mesh, "output path for the transformed mesh");
        sub->callback([&, moving, fixed, out_path, rigid, apply_path, out_mesh] {
            run = [&, moving, fixed, out_path, rigid, apply_path, out_mesh]() {
                const auto p = load_landmarks(*moving);
                const auto q = load_landmarks(*fixed);
                const AffineTransform a = *rigid ? estimate_rigid(p, q) : estimate_affine(p, q);
                save_affine(a, *out_path);
                const auto residual = registration_residual(a, p, q);
                Summary out(as_json);
                out.add("landmarks", p.size());
                out.add("mode", *rigid ? "rigid" : "affine");
                out.add("rms_mm", residual.rms);
                out.add("out", *out_path);
                if (!apply_path->empty()) {
                    if (out_mesh->empty())
                        throw Error(ErrorClass::usage, "--apply requires --out-mesh");
                    save_mesh(apply_affine(a, load_mesh(*apply_path).mesh), *out_mesh);
                    out.add("out_mesh", *out_mesh);
                }
                out.flush();
                return 0;
            };
        });
    }

    // ---- template -----------------------------------------------------------
    {
        auto* sub = app.add_subcommand("template", "vertex-wise average surface of an ensemble");
        auto ens_path = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        sub->add_option("ensemble,--ensemble", *ens_path, "ensemble manifest or packed NGEN1 file")
            ->required();
        sub->add_option("--out", *out_path, "output template mesh (.ply)")->required();
        sub->callback([&, ens_path, out_path] {
            run = [&, ens_path, out_path]() {
                const auto ens = load_ensemble(*ens_path);
                const auto tmpl = average_template(ens);
                save_mesh(tmpl, *out_path);
                Summary out(as_json);
                out.add("subjects", ens.subject_count());
                out.add("vertices", tmpl.vertex_count());
                out.add("out", *out_path);
                out.flush();
                return 0;
            };
        });
    }

    // ---- displacement ---------------------------------------------------------
    {
        auto* sub = app.add_subcommand(
            "displacement", "per-vertex displacement lengths of one subject vs a template");
        auto ens_path = std::make_shared<std::string>();
        auto tmpl_path = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        auto subject = std::make_shared<std::size_t>(0);
        sub->add_option("ensemble,--ensemble", *ens_path, "ensemble manifest or packed NGEN1 file")
            ->required();
        sub->add_option("--subject", *subject, "subject index (0-based)")->required();
        sub->add_option("--template", *tmpl_path, "template mesh (.ply)")->required();
        sub->add_option("--out", *out_path, "output mesh with per-vertex quality channel")
            ->required();
        sub->callback([&, ens_path, tmpl_path, out_path, subject] {
            run = [&, ens_path, tmpl_path, out_path, subject]() {
                const auto ens = load_ensemble(*ens_path);
                const auto tmpl = load_mesh(*tmpl_path).mesh;
                const auto field = displacement_field(ens, tmpl, *subject);
                export_scalar_mesh(tmpl, field.lengths, *out_path);
                double mean = 0.0;
                for (double l : field.lengths) mean += l;
                if (!field.lengths.empty()) mean /= double(field.lengths.size());
                Summary out(as_json);
                out.add("subject", *subject);
                out.add("mean_length_mm", mean);
                out.add("out", *out_path);
                out.flush();
                return 0;
            };
        });
    }

    // ---- fa -------------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("fa", "fractional anisotropy map from tensor components");
        auto tensors = std::make_shared<std::vector<std::string>>();
        auto out_path = std::make_shared<std::string>();
        sub->add_option("--tensors", *tensors,
                        "six component volumes: dxx dyy dzz dxy dxz dyz")
            ->expected(6)
            ->required();
        sub->add_option("--out", *out_path, "output FA map (.nii, float32)")->required();
        sub->callback([&, tensors, out_path] {
            run = [&, tensors, out_path]() {
                std::array<Volume3D, 6> vols;
                for (int c = 0; c < 6; ++c) vols[c] = load_volume((*tensors)[c]);
                const auto field = TensorField::from_volumes(vols);
                FaMapStats stats;
                const auto map = fa_map(field, &stats);
                save_nifti(map, *out_path);
                Summary out(as_json);
                out.add("voxels", map.size());
                out.add("non_spd_voxels", stats.negative_eigenvalue_voxels);
                out.add("fa_min", map.min_value());
                out.add("fa_max", map.max_value());
                out.add("out", *out_path);
                out.flush();
                return 0;
            };
        });
    }

    // ---- tracts ---------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("tracts", "fiber tract utilities");
        sub->require_subcommand(1);

        auto* ss = sub->add_subcommand("subsample", "keep every k-th tract above a length floor");
        auto in_path = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        auto stride = std::make_shared<std::size_t>(30);
        auto min_points = std::make_shared<std::size_t>(10);
        auto binary = std::make_shared<bool>(false);
        ss->add_option("input,--input", *in_path, "tract file (text or NGTR1)")->required();
        ss->add_option("output,--output", *out_path, "output tract file")->required();
        ss->add_option("--stride", *stride, "keep indices 0, stride, 2*stride, ...");
        ss->add_option("--min-points", *min_points, "keep only tracts with more points than this");
        ss->add_flag("--binary", *binary, "write the NGTR1 binary variant");
        ss->callback([&, in_path, out_path, stride, min_points, binary] {
            run = [&, in_path, out_path, stride, min_points, binary]() {
                const auto tracts = load_tracts(*in_path);
                const auto picked = subsample_tracts(tracts, *stride, *min_points);
                save_tracts(picked, *out_path, *binary);
                Summary out(as_json);
                out.add("tracts_in", tracts.size());
                out.add("tracts_out", picked.size());
                out.add("out", *out_path);
                out.flush();
                return 0;
            };
        });

        auto* ep = sub->add_subcommand("endpoints", "first and last point of every tract");
        auto ep_in = std::make_shared<std::string>();
        auto ep_out = std::make_shared<std::string>();
        ep->add_option("input,--input", *ep_in, "tract file (text or NGTR1)")->required();
        ep->add_option("--out", *ep_out, "output CSV (tract,end,x,y,z)")->required();
        ep->callback([&, ep_in, ep_out] {
            run = [&, ep_in, ep_out]() {
                const auto tracts = load_tracts(*ep_in);
                const auto eps = tract_endpoints(tracts);
                std::string csv = "tract,end,x,y,z\n";
                for (const auto& e : eps) {
                    csv += std::to_string(e.tract_index) + ',' +
                           (e.end == TractEnd::head ? "head" : "tail") + ',' +
                           format_g(e.point[0], 17) + ',' + format_g(e.point[1], 17) + ',' +
                           format_g(e.point[2], 17) + '\n';
                }
                atomic_write_file(*ep_out, csv);
                Summary out(as_json);
                out.add("tracts", tracts.size());
                out.add("endpoints", eps.size());
                out.add("out", *ep_out);
                out.flush();
                return 0;
            };
        });
    }

    // ---- segment ---------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("segment", "Gaussian-mixture intensity segmentation");
        auto file = std::make_shared<std::string>();
        auto out_prefix = std::make_shared<std::string>();
        auto classes = std::make_shared<std::size_t>(3);
        auto max_iters = std::make_shared<std::size_t>(100);
        auto tol = std::make_shared<double>(1e-8);
        sub->add_option("file,--file", *file, "scalar volume (.hdr or .nii)")->required();
        sub->add_option("--classes", *classes, "number of tissue classes");
        sub->add_option("--max-iters", *max_iters, "EM iteration cap");
        sub->add_option("--tol", *tol, "log-likelihood convergence tolerance");
        sub->add_option("--out", *out_prefix, "prefix for per-class posterior Analyze pairs")
            ->required();
        sub->callback([&, file, out_prefix, classes, max_iters, tol] {
            run = [&, file, out_prefix, classes, max_iters, tol]() {
                const Volume3D vol = load_volume(*file);
                const auto fit = gmm_segment(vol, *classes, *max_iters, *tol);
                for (std::size_t k = 0; k < fit.class_count; ++k) {
                    VolumeHeader h;
                    h.dims = {fit.dims[0], fit.dims[1], fit.dims[2], 1};
                    h.voxel_size = vol.header().voxel_size;
                    h.datatype = Datatype::f32;
                    h.description = "tissue posterior class " + std::to_string(k);
                    std::vector<float> map(fit.posteriors[k].begin(), fit.posteriors[k].end());
                    save_analyze(Volume3D(h, std::move(map)),
                                 *out_prefix + "_class" + std::to_string(k) + ".hdr");
                }
                Summary out(as_json);
                out.add("classes", fit.class_count);
                out.add("iterations", fit.iterations);
                out.add("converged", fit.converged);
                for (std::size_t k = 0; k < fit.class_count; ++k) {
                    out.add("mean_" + std::to_string(k), fit.class_means[k]);
                    out.add("sd_" + std::to_string(k), std::sqrt(fit.class_variances[k]));
                    out.add("weight_" + std::to_string(k), fit.class_weights[k]);
                }
                out.add("out_prefix", *out_prefix);
                out.flush();
                return 0;
            };
        });
    }

    // --manifest is declared per subcommand for help, but applied here
    for (auto* sub : app.get_subcommands({})) {
        sub->add_option("--manifest", "key = value file supplying default flag values");
        for (auto* nested : sub->get_subcommands({}))
            nested->add_option("--manifest", "key = value file supplying default flag values");
    }

    try {
        std::vector<std::string> args;
        try {
            args = apply_manifest(argc, argv);
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return e.exit_code();
        }
        std::vector<const char*> argp;
        argp.reserve(args.size());
        for (const auto& a : args) argp.push_back(a.c_str());
        app.parse(static_cast<int>(argp.size()), argp.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        return run();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
