#include <cstdlib>
#include <iostream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qtflow/errors.hpp"
#include "qtflow/run.hpp"

namespace {

void print_usage(std::ostream& os) {
    os << "usage:\n"
          "  qtflow run --config <path> [--out <dir>]\n"
          "  qtflow study --config <path> [--levels <k>] [--out <dir>]\n"
          "  qtflow audit <dir>\n"
          "  qtflow selftest\n"
          "\n"
          "run       integrate the configured problem, writing diagnostics\n"
          "          CSV and field snapshots\n"
          "study     temporal convergence study against a fine reference\n"
          "audit     re-verify energy law and update identities from the\n"
          "          snapshots of a previous run\n"
          "selftest  built-in invariant suite on synthetic problems\n"
          "\n"
          "QTFLOW_THREADS caps the parallel width (0 or unset = automatic);\n"
          "results are bit-identical for any thread count.\n";
}

struct CliArgs {
    std::string config;
    std::string out;
    int levels = 3;
    bool ok = true;
};

CliArgs parse_flags(int argc, char** argv, int from) {
    CliArgs args;
    for (int i = from; i < argc; ++i) {
        const std::string flag = argv[i];
        auto value = [&]() -> const char* {
            if (i + 1 >= argc) {
                std::cerr << "error: " << flag << " needs a value\n";
                args.ok = false;
                return "";
            }
            return argv[++i];
        };
        if (flag == "--config") {
            args.config = value();
        } else if (flag == "--out") {
            args.out = value();
        } else if (flag == "--levels") {
            args.levels = std::atoi(value());
        } else {
            std::cerr << "error: unknown flag '" << flag << "'\n";
            args.ok = false;
        }
        if (!args.ok) break;
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("QTFLOW_THREADS")) {
        const int k = std::atoi(env);
#ifdef _OPENMP
        if (k > 0) omp_set_num_threads(k);
#else
        (void)k;
#endif
    }

    if (argc < 2) {
        print_usage(std::cerr);
        return qtflow::kExitUsage;
    }
    const std::string cmd = argv[1];

    try {
        if (cmd == "run" || cmd == "study") {
            const CliArgs args = parse_flags(argc, argv, 2);
            if (!args.ok || args.config.empty()) {
                if (args.config.empty())
                    std::cerr << "error: --config is required\n";
                print_usage(std::cerr);
                return qtflow::kExitUsage;
            }
            qtflow::RunConfig cfg = qtflow::load_config(args.config);
            if (!args.out.empty()) cfg.output_dir = args.out;
            if (cmd == "run") {
                return qtflow::run_simulation(cfg);
            }
            if (args.levels < 3) {
                std::cerr << "error: --levels must be >= 3\n";
                return qtflow::kExitUsage;
            }
            return qtflow::run_study(cfg, args.levels, cfg.output_dir);
        }
        if (cmd == "audit") {
            if (argc != 3) {
                std::cerr << "error: audit needs exactly one directory\n";
                print_usage(std::cerr);
                return qtflow::kExitUsage;
            }
            return qtflow::run_audit(argv[2]);
        }
        if (cmd == "selftest") {
            return qtflow::run_selftest();
        }
        if (cmd == "--help" || cmd == "-h" || cmd == "help") {
            print_usage(std::cout);
            return qtflow::kExitOk;
        }
        std::cerr << "error: unknown command '" << cmd << "'\n";
        print_usage(std::cerr);
        return qtflow::kExitUsage;
    } catch (const qtflow::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return qtflow::kExitConfig;
    } catch (const qtflow::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return qtflow::kExitConfig;
    } catch (const qtflow::NonpositiveRadicandError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qtflow::kExitRadicand;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qtflow::kExitIo;
    }
}
