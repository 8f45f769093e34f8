#include "cmcg/app.hpp"

int main(int argc, char** argv) { return cmcg::app::run(argc, argv); }
