fn main() {
    // placeholder until the subcommands land
}
