//! Load a partial TOML configuration over the defaults and print the result.

use topicnet::config::{schema_versions, Config};

fn main() -> topicnet::Result<()> {
    let cfg = Config::from_toml_str(
        r#"
[lda]
k = 20
sweeps = 500

[trainer]
epochs = 10
"#,
    )?;
    println!("alpha = 50/K = {}", cfg.lda.lda_config(0).alpha);
    print!("{}", cfg.to_toml_string());

    println!("\nartifact formats:");
    for (kind, format, v) in schema_versions() {
        println!("  {kind:<12} {format} v{v}");
    }

    match Config::from_toml_str("[lda]\ntopics = 3\n") {
        Err(e) => println!("\nunknown key rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
