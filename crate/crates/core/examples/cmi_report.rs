//! Code-mixing index per sentence and the grouped histogram of a corpus.
use codeswitch::cmi::{cmi, histogram};
use codeswitch::corpus::Corpus;

fn main() {
    let corpus = Corpus::from_lines(
        "demo",
        &["我 like 咖啡", "we go 吃饭 then 回家", "今天 很 忙", "ok lah", "(noise)"],
    );
    for s in corpus.iter() {
        let score = cmi(s);
        println!("{:6.2}  {s}", score.value);
    }
    println!("{}", histogram(&corpus).to_table("%"));
}
