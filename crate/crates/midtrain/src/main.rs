fn main() {
    midtrain::cli::run();
}
