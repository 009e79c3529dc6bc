fn main() {
    // Die quietly on SIGPIPE like other unix filters instead of panicking
    // when output is piped into a pager that exits early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(foldover::cli::run());
}
