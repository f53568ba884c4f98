//! Tokenizes mixed Mandarin/English lines and prints each token's language.
use codeswitch::corpus::tokenize;

fn main() {
    for line in ["我 今天 have a meeting 啦", "(laugh) ok 好的", "[noise]"] {
        let s = tokenize(line);
        let tagged: Vec<String> = s.tokens.iter().map(|t| format!("{}/{:?}", t.surface(), t.tag())).collect();
        println!("{}", tagged.join(" "));
    }
}
