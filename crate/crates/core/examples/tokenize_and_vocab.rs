//! Tokenize a handful of articles, build a vocabulary and encode bags of words.

use topicnet::corpus::{build_vocabulary, encode, Tokenizer, VocabConfig};

fn main() -> topicnet::Result<()> {
    let articles = [
        "The striker scored twice as the home team won the league final.",
        "Parliament passed the budget after a long debate over taxes.",
        "The team's coach praised the striker after the final whistle.",
        "Taxes on fuel rose again, and the budget debate continues.",
    ];
    let tok = Tokenizer::english();
    let tokens: Vec<Vec<String>> = articles.iter().map(|a| tok.tokenize(a)).collect();
    for t in &tokens {
        println!("{t:?}");
    }

    // keep words seen in at least two articles
    let cfg = VocabConfig { min_df: 2, ..VocabConfig::default() };
    let vocab = build_vocabulary(&tokens, &cfg)?;
    println!("\nvocabulary ({} words, hash {}): {:?}", vocab.len(), vocab.hash(), vocab.words());

    for (i, t) in tokens.iter().enumerate() {
        let bow = encode(t, &vocab);
        let named: Vec<String> =
            bow.entries().iter().map(|&(id, n)| format!("{}×{n}", vocab.word(id).unwrap())).collect();
        println!("doc {i}: {} tokens in vocab: {}", bow.total_tokens(), named.join(" "));
    }
    Ok(())
}
