#include "pathnet/cli/commands.hpp"

int main(int argc, char** argv)
{
    return pathnet::cli::run(argc, argv);
}
