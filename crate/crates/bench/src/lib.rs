//! Shared fixtures for the citkit benchmarks.

use citkit::{parse_model, Model};

pub const QEMU_MODEL: &str = "\
img_format:   raw, qcow, qcow2, luks, vmdk
img_protocol: file, nbd
cache_mode:   none, writeback, writethrough, directsync, unsafe
misalign:     true, false
qemu_img:     /usr/bin/qemu-img, /git/qemu/qemu-img
";

pub fn qemu() -> Model {
    parse_model(QEMU_MODEL).expect("fixture model parses")
}

/// Uniform model with `k` factors of `v` levels each.
pub fn uniform(k: usize, v: usize) -> Model {
    let text: String = (0..k)
        .map(|f| {
            let levels: Vec<String> = (0..v).map(|l| format!("l{l}")).collect();
            format!("f{f}: {}\n", levels.join(", "))
        })
        .collect();
    parse_model(&text).expect("uniform model parses")
}
