// momentctl: run a moment-problem job and write its verdict.
//
//   momentctl <check|solve|verify|report> --job job.json [--out dir]
//             [--seed N] [--threads K] [--dump-matrices]
//
// Exit status: 0 measure constructed or conditions certified, 2 a necessary
// condition failed, 3 inconclusive, 1 bad input.

#include <iostream>

#include <CLI11.hpp>

#include "momentlimit/pipeline.hpp"

int main(int argc, char** argv)
{
    using namespace momentlimit;

    CLI::App app{"Moment problems on projective limits of finitely generated subalgebras"};
    std::string cmd_name;
    std::string job_path;
    std::string out_dir = "momentctl-out";
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool dump = false;

    app.add_option("command", cmd_name, "check, solve, verify or report")
        ->required()
        ->check(CLI::IsMember({"check", "solve", "verify", "report"}));
    app.add_option("--job", job_path, "job descriptor (JSON)")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "seed for the audit");
    app.add_option("--threads", threads, "worker threads for per-index stages")->check(CLI::PositiveNumber);
    app.add_flag("--dump-matrices", dump, "write moment and localizing matrices as CSV");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    JobDescriptor job;
    try
    {
        job = load_job(job_path);
    }
    catch (const std::exception& e)
    {
        std::cerr << "momentctl: " << e.what() << "\n";
        return 1;
    }

    try
    {
        RunOptions opts;
        opts.cmd = command_from_string(cmd_name);
        opts.seed = seed;
        opts.threads = threads;
        opts.keep_matrices = dump;
        const PipelineVerdict v = run(job, opts);
        write_artifacts(out_dir, v);
        if (v.cmd == command::report)
            std::cout << render_report(v);
        else
            std::cout << to_string(v.overall) << "\n";
        return exit_code(v.overall);
    }
    catch (const std::exception& e)
    {
        std::cerr << "momentctl: " << e.what() << "\n";
        return 1;
    }
}
