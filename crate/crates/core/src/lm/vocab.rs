use rustc_hash::FxHashMap;

pub const UNK: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;

pub const UNK_WORD: &str = "<unk>";
pub const BOS_WORD: &str = "<s>";
pub const EOS_WORD: &str = "</s>";

/// Dense word ↔ id mapping. Ids 0, 1 and 2 are always `<unk>`, `<s>` and
/// `</s>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    id_of: FxHashMap<String, u32>,
    words: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary {
            id_of: FxHashMap::default(),
            words: Vec::new(),
        };
        for w in [UNK_WORD, BOS_WORD, EOS_WORD] {
            v.insert(w);
        }
        v
    }

    /// Returns the id of `word`, adding it if absent.
    pub fn insert(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.id_of.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_owned());
        self.id_of.insert(word.to_owned(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.id_of.get(word).copied()
    }

    /// Id used when scoring text: unknown words, and literal sentence
    /// markers appearing inside text, map to `<unk>`.
    pub fn lookup(&self, word: &str) -> u32 {
        match self.id_of.get(word) {
            Some(&id) if id != BOS && id != EOS => id,
            _ => UNK,
        }
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}
