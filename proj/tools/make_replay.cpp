#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tidybot/core/dataset.hpp"
#include "tidybot/core/errors.hpp"
#include "tidybot/replay/script.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Compile a replay script into a replay jsonl file"};
    std::string script_path, dataset_path, out_path;
    std::vector<std::string> world_paths;
    std::string model{tidybot::llm::kDefaultModel};
    bool check = false;
    app.add_option("--script", script_path, "Replay script JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--dataset", dataset_path, "Scenario dataset JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--world", world_paths, "World JSON files")->check(CLI::ExistingFile);
    app.add_option("--out", out_path, "Output jsonl")->required();
    app.add_option("--model", model, "Model id recorded in each entry");
    app.add_flag("--check", check, "Fail unless --out already holds the compiled bytes");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto dataset = tidybot::load_dataset(dataset_path);
        std::vector<tidybot::sim::World> worlds;
        for (const auto& p : world_paths) worlds.push_back(tidybot::sim::load_world(p));
        tidybot::llm::DecodingParams params;
        params.model_id = model;
        const auto text = tidybot::replay::render_jsonl(
            tidybot::replay::compile_replay(tidybot::replay::load_replay_script(script_path), dataset, worlds, params));
        if (check) {
            if (tidybot::read_file(out_path) != text) {
                std::cerr << out_path << " is stale; regenerate it without --check\n";
                return 1;
            }
            std::cout << out_path << " is up to date\n";
            return 0;
        }
        tidybot::write_file_atomic(out_path, text);
        std::cout << "wrote " << out_path << "\n";
        return 0;
    } catch (const tidybot::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_class());
    }
}
