use std::env;
use std::fs;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("read cbindgen.toml");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let bindings = match cbindgen::generate_with_config(&crate_dir, config) {
        Ok(b) => b,
        Err(e) => {
            println!("cargo:warning=header not regenerated: {e}");
            return;
        }
    };
    let mut text = Vec::new();
    bindings.write(&mut text);
    let out = crate_dir.join("include").join("rcgain.h");
    // only touch the file when it changes so downstream C builds stay cached
    if fs::read(&out).ok().as_deref() != Some(text.as_slice()) {
        fs::create_dir_all(out.parent().unwrap()).unwrap();
        fs::write(&out, text).unwrap();
    }
}
