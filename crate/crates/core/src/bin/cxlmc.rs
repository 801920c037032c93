fn main() {
    // placeholder while the library comes up; replaced by the CLI
}
